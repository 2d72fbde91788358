#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "rlmtkit/mat.hpp"
#include "rlmtkit/vocab.hpp"

namespace rlmtkit {

/// Parameters of the token policy: a single-hidden-layer model that reads
/// the mean-pooled context embedding plus the last-token embedding through
/// a tanh layer into next-token logits and a scalar value head. All math is
/// 64-bit so finite-difference gradient checks stay clean.
struct PolicyParams {
    Mat embed;     // vocab x d
    Mat w_mean;    // d x d, applied to the mean-pooled context embedding
    Mat w_last;    // d x d, applied to the last-token embedding
    Mat b_hidden;  // 1 x d
    Mat w_out;     // d x vocab output projection
    Mat value_w;   // 1 x d value head
    Mat value_b;   // 1 x 1 value head bias

    PolicyParams() = default;
    PolicyParams(int vocab_size, int embed_dim);

    int vocab_size() const { return embed.rows; }
    int embed_dim() const { return embed.cols; }
    bool finite() const;

    /// Uniform(-0.05, 0.05) initialization drawn from the given RNG in a
    /// fixed tensor order.
    void init_uniform(std::mt19937_64& rng);

    /// Visits every tensor in the fixed serialization order.
    void for_each_tensor(const std::function<void(const char*, Mat&)>& fn);
    void for_each_tensor(const std::function<void(const char*, const Mat&)>& fn) const;
};

/// Gradient with the same shape as PolicyParams.
struct PolicyGrad {
    Mat embed, w_mean, w_last, b_hidden, w_out, value_w, value_b;

    PolicyGrad() = default;
    explicit PolicyGrad(const PolicyParams& like);

    void add_scaled(const PolicyGrad& other, double scale);
    double max_abs() const;

    /// Same tensor order as PolicyParams::for_each_tensor.
    void for_each_tensor(const std::function<void(const char*, const Mat&)>& fn) const;
};

/// In-place SGD step: params -= lr * grad. Throws NumericError if any
/// parameter becomes non-finite.
void apply_gradient(PolicyParams& params, const PolicyGrad& grad, double lr);

/// Frozen deep copy of the policy at snapshot time. Only const access is
/// exposed so the reference cannot drift during a training phase.
class ReferenceParams {
public:
    explicit ReferenceParams(PolicyParams snapshot) : params_(std::move(snapshot)) {}
    const PolicyParams& get() const { return params_; }

private:
    PolicyParams params_;
};

/// Per-token log-probabilities of a completion given a prompt, plus their sum.
struct SequenceLogProb {
    std::vector<double> per_token;
    double total = 0.0;
};

/// Next-token probability distribution over the full vocabulary given a
/// non-empty context. Entries are positive and sum to 1 within 1e-12.
std::vector<double> forward_dist(const PolicyParams& params, std::span<const int> context);

/// Scalar value-head estimate on the last hidden state of the prefix.
double value_estimate(const PolicyParams& params, std::span<const int> prefix);

/// Autoregressive sampling: softmax(logits / temperature) per step, stopping
/// at EOS or max_len tokens. A sampled EOS is included as the final token.
/// temperature below 1e-6 decodes greedily. Deterministic given the seed.
std::vector<int> sample_sequence(const PolicyParams& params, std::span<const int> prompt,
                                 double temperature, int max_len, uint64_t seed);

/// Log-probabilities the policy assigns to an existing completion.
SequenceLogProb sequence_logprob(const PolicyParams& params, std::span<const int> prompt,
                                 std::span<const int> completion);

/// Analytic gradient of sequence_logprob(...).total with respect to every
/// parameter tensor.
PolicyGrad logprob_grad(const PolicyParams& params, std::span<const int> prompt,
                        std::span<const int> completion);

/// Analytic gradient of value_estimate with respect to every parameter tensor.
PolicyGrad value_grad(const PolicyParams& params, std::span<const int> prefix);

ReferenceParams snapshot_reference(const PolicyParams& params);

/// One position of the shared forward pass. Exposed so loss code can run
/// custom backward passes (policy-gradient and KL terms share it).
struct ForwardCache {
    std::vector<double> mean_embed;  // mean-pooled context embedding
    std::vector<double> last_embed;
    std::vector<double> hidden;  // tanh activation
    std::vector<double> probs;   // softmax over logits
};

ForwardCache forward_cache(const PolicyParams& params, std::span<const int> context);

/// Accumulates into grad the pullback of dL/dlogits through one forward
/// position; dvalue adds the value-head path for dL/dvalue.
void backprop_position(const PolicyParams& params, std::span<const int> context,
                       const ForwardCache& cache, std::span<const double> dlogits,
                       double dvalue, PolicyGrad& grad);

}  // namespace rlmtkit
