#include "rlmtkit/policy.hpp"

#include <algorithm>
#include <cmath>

#include "rlmtkit/errors.hpp"
#include "rlmtkit/rng.hpp"

namespace rlmtkit {

PolicyParams::PolicyParams(int vocab_size, int embed_dim)
    : embed(vocab_size, embed_dim),
      w_mean(embed_dim, embed_dim),
      w_last(embed_dim, embed_dim),
      b_hidden(1, embed_dim),
      w_out(embed_dim, vocab_size),
      value_w(1, embed_dim),
      value_b(1, 1) {
    if (vocab_size <= 0 || embed_dim <= 0)
        throw InvalidInput("PolicyParams: dimensions must be positive");
}

bool PolicyParams::finite() const {
    bool ok = true;
    for_each_tensor([&](const char*, const Mat& m) { ok = ok && m.finite(); });
    return ok;
}

void PolicyParams::init_uniform(std::mt19937_64& rng) {
    for_each_tensor([&](const char*, Mat& m) {
        for (double& v : m.a) v = uniform_range(rng, -0.05, 0.05);
    });
}

void PolicyParams::for_each_tensor(const std::function<void(const char*, Mat&)>& fn) {
    fn("embed", embed);
    fn("w_mean", w_mean);
    fn("w_last", w_last);
    fn("b_hidden", b_hidden);
    fn("w_out", w_out);
    fn("value_w", value_w);
    fn("value_b", value_b);
}

void PolicyParams::for_each_tensor(
    const std::function<void(const char*, const Mat&)>& fn) const {
    fn("embed", embed);
    fn("w_mean", w_mean);
    fn("w_last", w_last);
    fn("b_hidden", b_hidden);
    fn("w_out", w_out);
    fn("value_w", value_w);
    fn("value_b", value_b);
}

PolicyGrad::PolicyGrad(const PolicyParams& like)
    : embed(like.embed.rows, like.embed.cols),
      w_mean(like.w_mean.rows, like.w_mean.cols),
      w_last(like.w_last.rows, like.w_last.cols),
      b_hidden(like.b_hidden.rows, like.b_hidden.cols),
      w_out(like.w_out.rows, like.w_out.cols),
      value_w(like.value_w.rows, like.value_w.cols),
      value_b(like.value_b.rows, like.value_b.cols) {}

void PolicyGrad::add_scaled(const PolicyGrad& other, double scale) {
    embed.add_scaled(other.embed, scale);
    w_mean.add_scaled(other.w_mean, scale);
    w_last.add_scaled(other.w_last, scale);
    b_hidden.add_scaled(other.b_hidden, scale);
    w_out.add_scaled(other.w_out, scale);
    value_w.add_scaled(other.value_w, scale);
    value_b.add_scaled(other.value_b, scale);
}

double PolicyGrad::max_abs() const {
    double m = 0.0;
    for (const Mat* t : {&embed, &w_mean, &w_last, &b_hidden, &w_out, &value_w, &value_b})
        for (double v : t->a) m = std::max(m, std::abs(v));
    return m;
}

void PolicyGrad::for_each_tensor(
    const std::function<void(const char*, const Mat&)>& fn) const {
    fn("embed", embed);
    fn("w_mean", w_mean);
    fn("w_last", w_last);
    fn("b_hidden", b_hidden);
    fn("w_out", w_out);
    fn("value_w", value_w);
    fn("value_b", value_b);
}

void apply_gradient(PolicyParams& params, const PolicyGrad& grad, double lr) {
    params.embed.add_scaled(grad.embed, -lr);
    params.w_mean.add_scaled(grad.w_mean, -lr);
    params.w_last.add_scaled(grad.w_last, -lr);
    params.b_hidden.add_scaled(grad.b_hidden, -lr);
    params.w_out.add_scaled(grad.w_out, -lr);
    params.value_w.add_scaled(grad.value_w, -lr);
    params.value_b.add_scaled(grad.value_b, -lr);
    if (!params.finite())
        throw NumericError("apply_gradient: parameters became non-finite");
}

namespace {

void check_context(const PolicyParams& params, std::span<const int> context,
                   const char* what) {
    if (context.empty()) throw InvalidInput(std::string(what) + ": empty context");
    for (int t : context)
        if (t < 0 || t >= params.vocab_size())
            throw InvalidInput(std::string(what) + ": token outside vocab");
}

/// Hidden activation for a context; mean/last embeddings returned through out-params.
void hidden_state(const PolicyParams& params, std::span<const int> context,
                  std::vector<double>& mean_embed, std::vector<double>& last_embed,
                  std::vector<double>& hidden) {
    const int d = params.embed_dim();
    mean_embed.assign(d, 0.0);
    for (int tok : context)
        for (int j = 0; j < d; ++j) mean_embed[j] += params.embed(tok, j);
    const double inv_len = 1.0 / static_cast<double>(context.size());
    for (int j = 0; j < d; ++j) mean_embed[j] *= inv_len;

    last_embed.assign(d, 0.0);
    const int last = context.back();
    for (int j = 0; j < d; ++j) last_embed[j] = params.embed(last, j);

    hidden.assign(d, 0.0);
    for (int i = 0; i < d; ++i) {
        double pre = params.b_hidden(0, i);
        for (int j = 0; j < d; ++j)
            pre += params.w_mean(i, j) * mean_embed[j] + params.w_last(i, j) * last_embed[j];
        hidden[i] = std::tanh(pre);
    }
}

std::vector<double> logits_from_hidden(const PolicyParams& params,
                                       const std::vector<double>& hidden) {
    const int d = params.embed_dim();
    const int v = params.vocab_size();
    std::vector<double> logits(v, 0.0);
    for (int i = 0; i < d; ++i) {
        const double h = hidden[i];
        if (h == 0.0) continue;
        for (int j = 0; j < v; ++j) logits[j] += params.w_out(i, j) * h;
    }
    return logits;
}

std::vector<double> softmax(std::vector<double> logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& z : logits) {
        z = std::exp(z - mx);
        sum += z;
    }
    for (double& z : logits) z /= sum;
    return logits;
}

}  // namespace

ForwardCache forward_cache(const PolicyParams& params, std::span<const int> context) {
    check_context(params, context, "forward");
    ForwardCache c;
    hidden_state(params, context, c.mean_embed, c.last_embed, c.hidden);
    c.probs = softmax(logits_from_hidden(params, c.hidden));
    return c;
}

std::vector<double> forward_dist(const PolicyParams& params, std::span<const int> context) {
    return forward_cache(params, context).probs;
}

double value_estimate(const PolicyParams& params, std::span<const int> prefix) {
    check_context(params, prefix, "value_estimate");
    std::vector<double> m, e, h;
    hidden_state(params, prefix, m, e, h);
    double v = params.value_b(0, 0);
    for (int i = 0; i < params.embed_dim(); ++i) v += params.value_w(0, i) * h[i];
    return v;
}

std::vector<int> sample_sequence(const PolicyParams& params, std::span<const int> prompt,
                                 double temperature, int max_len, uint64_t seed) {
    check_context(params, prompt, "sample_sequence");
    if (temperature < 0.0) throw InvalidInput("sample_sequence: negative temperature");
    if (max_len < 1) throw InvalidInput("sample_sequence: max_len must be >= 1");

    const bool greedy = temperature < 1e-6;
    std::mt19937_64 rng(seed);
    std::vector<int> context(prompt.begin(), prompt.end());
    std::vector<int> completion;
    std::vector<double> m, e, h;

    for (int step = 0; step < max_len; ++step) {
        hidden_state(params, context, m, e, h);
        std::vector<double> logits = logits_from_hidden(params, h);
        if (!greedy)
            for (double& z : logits) z /= temperature;
        std::vector<double> probs = softmax(std::move(logits));

        int tok;
        if (greedy) {
            tok = static_cast<int>(
                std::max_element(probs.begin(), probs.end()) - probs.begin());
        } else {
            // Inverse-CDF sampling keeps the draw a pure function of the RNG stream.
            double u = uniform01(rng);
            double acc = 0.0;
            tok = static_cast<int>(probs.size()) - 1;
            for (size_t j = 0; j < probs.size(); ++j) {
                acc += probs[j];
                if (u < acc) {
                    tok = static_cast<int>(j);
                    break;
                }
            }
        }
        completion.push_back(tok);
        context.push_back(tok);
        if (tok == Vocab::kEos) break;
    }
    return completion;
}

SequenceLogProb sequence_logprob(const PolicyParams& params, std::span<const int> prompt,
                                 std::span<const int> completion) {
    check_context(params, prompt, "sequence_logprob");
    if (completion.empty()) throw InvalidInput("sequence_logprob: empty completion");
    for (int t : completion)
        if (t < 0 || t >= params.vocab_size())
            throw InvalidInput("sequence_logprob: token outside vocab");

    SequenceLogProb out;
    out.per_token.reserve(completion.size());
    std::vector<int> context(prompt.begin(), prompt.end());
    std::vector<double> m, e, h;
    for (int tok : completion) {
        hidden_state(params, context, m, e, h);
        std::vector<double> probs = softmax(logits_from_hidden(params, h));
        double lp = std::log(probs[static_cast<size_t>(tok)]);
        out.per_token.push_back(lp);
        out.total += lp;
        context.push_back(tok);
    }
    return out;
}

void backprop_position(const PolicyParams& params, std::span<const int> context,
                       const ForwardCache& cache, std::span<const double> dlogits,
                       double dvalue, PolicyGrad& grad) {
    const int d = params.embed_dim();
    const int v = params.vocab_size();

    std::vector<double> dh(d, 0.0);
    if (!dlogits.empty()) {
        for (int i = 0; i < d; ++i) {
            const double h = cache.hidden[i];
            double acc = 0.0;
            for (int j = 0; j < v; ++j) {
                grad.w_out(i, j) += h * dlogits[j];
                acc += params.w_out(i, j) * dlogits[j];
            }
            dh[i] = acc;
        }
    }
    if (dvalue != 0.0) {
        grad.value_b(0, 0) += dvalue;
        for (int i = 0; i < d; ++i) {
            grad.value_w(0, i) += dvalue * cache.hidden[i];
            dh[i] += dvalue * params.value_w(0, i);
        }
    }

    std::vector<double> dpre(d), dmean(d, 0.0), dlast(d, 0.0);
    for (int i = 0; i < d; ++i)
        dpre[i] = (1.0 - cache.hidden[i] * cache.hidden[i]) * dh[i];

    for (int i = 0; i < d; ++i) {
        const double g = dpre[i];
        if (g == 0.0) continue;
        grad.b_hidden(0, i) += g;
        for (int j = 0; j < d; ++j) {
            grad.w_mean(i, j) += g * cache.mean_embed[j];
            grad.w_last(i, j) += g * cache.last_embed[j];
            dmean[j] += params.w_mean(i, j) * g;
            dlast[j] += params.w_last(i, j) * g;
        }
    }

    const double inv_len = 1.0 / static_cast<double>(context.size());
    for (int tok : context)
        for (int j = 0; j < d; ++j) grad.embed(tok, j) += dmean[j] * inv_len;
    const int last = context.back();
    for (int j = 0; j < d; ++j) grad.embed(last, j) += dlast[j];
}

PolicyGrad logprob_grad(const PolicyParams& params, std::span<const int> prompt,
                        std::span<const int> completion) {
    check_context(params, prompt, "logprob_grad");
    if (completion.empty()) throw InvalidInput("logprob_grad: empty completion");

    PolicyGrad grad(params);
    std::vector<int> context(prompt.begin(), prompt.end());
    std::vector<double> dlogits(static_cast<size_t>(params.vocab_size()));
    for (int tok : completion) {
        ForwardCache cache = forward_cache(params, context);
        // d log p(tok) / d logits = onehot(tok) - p
        for (size_t j = 0; j < dlogits.size(); ++j) dlogits[j] = -cache.probs[j];
        dlogits[static_cast<size_t>(tok)] += 1.0;
        backprop_position(params, context, cache, dlogits, 0.0, grad);
        context.push_back(tok);
    }
    return grad;
}

PolicyGrad value_grad(const PolicyParams& params, std::span<const int> prefix) {
    ForwardCache cache = forward_cache(params, prefix);
    PolicyGrad grad(params);
    backprop_position(params, prefix, cache, {}, 1.0, grad);
    return grad;
}

ReferenceParams snapshot_reference(const PolicyParams& params) {
    if (!params.finite())
        throw NumericError("snapshot_reference: non-finite parameters");
    return ReferenceParams(params);
}

}  // namespace rlmtkit
