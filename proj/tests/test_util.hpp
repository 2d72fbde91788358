#pragma once

// Shared test fixtures: random instance generators and the central
// finite-difference gradient oracle every loss in the project is checked
// against. The oracle only touches the loss value, never the analytic
// gradient path it verifies.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rlmtkit/policy.hpp"
#include "rlmtkit/rng.hpp"

namespace testutil {

using rlmtkit::Mat;
using rlmtkit::PolicyGrad;
using rlmtkit::PolicyParams;

/// Max relative error between the analytic gradient and central finite
/// differences (step h) of loss over every parameter entry.
inline double fd_max_rel_error(const PolicyParams& params, const PolicyGrad& grad,
                               const std::function<double(const PolicyParams&)>& loss,
                               double h = 1e-5) {
    // Collect mutable pointers to every tensor in serialization order.
    PolicyParams work = params;
    std::vector<Mat*> work_tensors;
    work.for_each_tensor([&](const char*, Mat& m) { work_tensors.push_back(&m); });
    std::vector<const Mat*> grad_tensors;
    grad.for_each_tensor(
        [&](const char*, const Mat& m) { grad_tensors.push_back(&m); });

    double worst = 0.0;
    for (size_t t = 0; t < work_tensors.size(); ++t) {
        Mat& m = *work_tensors[t];
        const Mat& g = *grad_tensors[t];
        for (size_t i = 0; i < m.a.size(); ++i) {
            const double original = m.a[i];
            m.a[i] = original + h;
            double up = loss(work);
            m.a[i] = original - h;
            double down = loss(work);
            m.a[i] = original;
            double numeric = (up - down) / (2.0 * h);
            double analytic = g.a[i];
            double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(numeric - analytic) / denom);
        }
    }
    return worst;
}

/// Random policy with entries uniform in [-scale, scale].
inline PolicyParams random_params(int vocab_size, int embed_dim, uint64_t seed,
                                  double scale = 0.5) {
    PolicyParams p(vocab_size, embed_dim);
    std::mt19937_64 rng(seed);
    p.for_each_tensor([&](const char*, Mat& m) {
        for (double& v : m.a) v = rlmtkit::uniform_range(rng, -scale, scale);
    });
    return p;
}

/// Random token sequence with ids in [0, vocab_size).
inline std::vector<int> random_tokens(int len, int vocab_size, std::mt19937_64& rng) {
    std::vector<int> out;
    out.reserve(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i)
        out.push_back(static_cast<int>(rng() % static_cast<uint64_t>(vocab_size)));
    return out;
}

/// Random string over the given alphabet.
inline std::string random_text(int len, std::string_view alphabet, std::mt19937_64& rng) {
    std::string out;
    for (int i = 0; i < len; ++i)
        out += alphabet[rng() % alphabet.size()];
    return out;
}

}  // namespace testutil
