#include "rlmtkit/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {
namespace algorithms {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double neg_log_sigmoid(double m) {
    if (m > 0) return std::log1p(std::exp(-m));
    return -m + std::log1p(std::exp(m));
}

/// KL between two softmax outputs plus its pullback into theta's logits:
/// dKL/dz_k = p_k * (log(p_k/q_k) - KL).
double kl_and_logit_grad(std::span<const double> p, std::span<const double> q,
                         std::vector<double>* dlogits) {
    double kl = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        kl += p[i] * std::log(p[i] / q[i]);
    }
    kl = std::max(kl, 0.0);
    if (dlogits) {
        dlogits->assign(p.size(), 0.0);
        for (size_t i = 0; i < p.size(); ++i) {
            if (p[i] <= 0.0) continue;
            (*dlogits)[i] = p[i] * (std::log(p[i] / q[i]) - kl);
        }
    }
    return kl;
}

/// One unit of the clipped surrogate and its d/d(lp_theta), where
/// ratio = exp(lp - lp_old). Positive advantages take min(rho*A, clip(rho)*A);
/// negative ones clip the ratio on both sides, which keeps |unit| within
/// (1+eps)|A| no matter how far the ratio drifts. The two branches agree
/// everywhere inside [1-eps, 1+eps], so strictly on-policy updates (ratio 1)
/// never see the difference.
double surrogate_unit(double ratio, double advantage, double epsilon, double* dlp) {
    if (advantage >= 0.0) {
        double unclipped = ratio * advantage;
        double clipped = std::min(ratio, 1.0 + epsilon) * advantage;
        if (unclipped <= clipped) {
            if (dlp) *dlp = ratio * advantage;
            return unclipped;
        }
        if (dlp) *dlp = 0.0;
        return clipped;
    }
    if (ratio > 1.0 - epsilon && ratio < 1.0 + epsilon) {
        if (dlp) *dlp = ratio * advantage;
        return ratio * advantage;
    }
    if (dlp) *dlp = 0.0;
    return std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
}

}  // namespace

std::optional<PreferencePair> build_preference_pair(
    std::span<const int> prompt,
    const std::vector<std::pair<std::vector<int>, double>>& scored_rollouts,
    PairRule rule) {
    (void)rule;  // BestWorst is the only rule
    if (scored_rollouts.size() < 2)
        throw InvalidInput("build_preference_pair: need at least 2 rollouts");

    size_t best = 0, worst = 0;
    for (size_t i = 1; i < scored_rollouts.size(); ++i) {
        if (scored_rollouts[i].second > scored_rollouts[best].second) best = i;
        if (scored_rollouts[i].second < scored_rollouts[worst].second) worst = i;
    }
    if (scored_rollouts[best].second == scored_rollouts[worst].second) return std::nullopt;
    if (scored_rollouts[best].first == scored_rollouts[worst].first) return std::nullopt;

    PreferencePair pair;
    pair.prompt.assign(prompt.begin(), prompt.end());
    pair.chosen = scored_rollouts[best].first;
    pair.rejected = scored_rollouts[worst].first;
    return pair;
}

DpoLossResult dpo_loss(double lp_theta_plus, double lp_theta_minus, double lp_ref_plus,
                       double lp_ref_minus, const DpoConfig& cfg) {
    if (cfg.beta <= 0) throw InvalidInput("dpo_loss: beta must be positive");
    double margin = cfg.beta * ((lp_theta_plus - lp_theta_minus) -
                                (lp_ref_plus - lp_ref_minus));
    DpoLossResult r;
    r.loss = neg_log_sigmoid(margin);
    double dloss_dmargin = sigmoid(margin) - 1.0;
    r.dloss_dlp_plus = cfg.beta * dloss_dmargin;
    r.dloss_dlp_minus = -cfg.beta * dloss_dmargin;
    return r;
}

DpoBatchResult dpo_objective(const std::vector<PreferencePair>& pairs,
                             const DpoConfig& cfg, const PolicyParams& params,
                             const ReferenceParams& ref) {
    if (pairs.empty()) throw InvalidInput("dpo_objective: empty pair batch");

    DpoBatchResult out;
    out.grad = PolicyGrad(params);
    const double inv_n = 1.0 / static_cast<double>(pairs.size());

    for (const auto& pair : pairs) {
        double lp_plus = sequence_logprob(params, pair.prompt, pair.chosen).total;
        double lp_minus = sequence_logprob(params, pair.prompt, pair.rejected).total;
        double ref_plus = sequence_logprob(ref.get(), pair.prompt, pair.chosen).total;
        double ref_minus = sequence_logprob(ref.get(), pair.prompt, pair.rejected).total;

        DpoLossResult r = dpo_loss(lp_plus, lp_minus, ref_plus, ref_minus, cfg);
        out.loss += r.loss * inv_n;
        out.mean_margin +=
            cfg.beta * ((lp_plus - lp_minus) - (ref_plus - ref_minus)) * inv_n;

        PolicyGrad g_plus = logprob_grad(params, pair.prompt, pair.chosen);
        PolicyGrad g_minus = logprob_grad(params, pair.prompt, pair.rejected);
        out.grad.add_scaled(g_plus, r.dloss_dlp_plus * inv_n);
        out.grad.add_scaled(g_minus, r.dloss_dlp_minus * inv_n);
    }
    return out;
}

AdvantageBatch group_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) throw InvalidInput("group_advantages: need K >= 2 rewards");
    AdvantageBatch batch;
    batch.estimator = AdvantageEstimator::GroupBaseline;
    // A constant group centers to exactly zero; bypass the mean so rounding
    // in sum/K cannot leave advantage dust that would move the policy.
    bool constant = std::all_of(rewards.begin(), rewards.end(),
                                [&](double r) { return r == rewards.front(); });
    if (constant) {
        batch.values.assign(rewards.size(), 0.0);
        return batch;
    }
    double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) /
                  static_cast<double>(rewards.size());
    batch.values.reserve(rewards.size());
    for (double r : rewards) batch.values.push_back(r - mean);
    return batch;
}

AdvantageBatch gae_advantages(std::span<const double> rewards,
                              std::span<const double> values, const PpoConfig& cfg) {
    if (rewards.size() != values.size())
        throw InvalidInput("gae_advantages: rewards/values length mismatch");
    if (rewards.empty()) throw InvalidInput("gae_advantages: empty sequence");

    const size_t n = rewards.size();
    AdvantageBatch batch;
    batch.estimator = AdvantageEstimator::Gae;
    batch.values.assign(n, 0.0);
    double next_adv = 0.0;
    for (size_t t = n; t-- > 0;) {
        double next_value = (t + 1 < n) ? values[t + 1] : 0.0;
        double delta = rewards[t] + cfg.gamma * next_value - values[t];
        next_adv = delta + cfg.gamma * cfg.gae_lambda * next_adv;
        batch.values[t] = next_adv;
    }
    return batch;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
    std::vector<double> returns(rewards.size(), 0.0);
    double acc = 0.0;
    for (size_t t = rewards.size(); t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        returns[t] = acc;
    }
    return returns;
}

double clipped_surrogate(std::span<const double> ratios, std::span<const double> advantages,
                         double epsilon) {
    if (ratios.size() != advantages.size())
        throw InvalidInput("clipped_surrogate: ratio/advantage length mismatch");
    if (ratios.empty()) throw InvalidInput("clipped_surrogate: empty batch");
    double total = 0.0;
    for (size_t i = 0; i < ratios.size(); ++i) {
        if (ratios[i] <= 0) throw InvalidInput("clipped_surrogate: nonpositive ratio");
        total += surrogate_unit(ratios[i], advantages[i], epsilon, nullptr);
    }
    return total / static_cast<double>(ratios.size());
}

double kl_penalty(std::span<const double> dist_theta, std::span<const double> dist_ref) {
    if (dist_theta.size() != dist_ref.size())
        throw InvalidInput("kl_penalty: dimension mismatch");
    double sum_p = 0.0, sum_q = 0.0;
    for (size_t i = 0; i < dist_theta.size(); ++i) {
        if (dist_theta[i] < 0 || dist_ref[i] < 0)
            throw InvalidInput("kl_penalty: negative probability");
        if (dist_theta[i] > 0 && dist_ref[i] <= 0)
            throw InvalidInput("kl_penalty: reference has zero mass where theta is positive");
        sum_p += dist_theta[i];
        sum_q += dist_ref[i];
    }
    if (std::abs(sum_p - 1.0) > 1e-6 || std::abs(sum_q - 1.0) > 1e-6)
        throw InvalidInput("kl_penalty: inputs must sum to 1");
    return kl_and_logit_grad(dist_theta, dist_ref, nullptr);
}

GrpoResult grpo_objective(const std::vector<GrpoGroup>& groups, const GrpoConfig& cfg,
                          const PolicyParams& params, const ReferenceParams& ref) {
    if (groups.empty()) throw InvalidInput("grpo_objective: empty group list");
    size_t total_rollouts = 0;
    for (const auto& g : groups) {
        if (static_cast<int>(g.rollouts.size()) != cfg.group_size)
            throw InvalidInput("grpo_objective: group size differs from configured K");
        for (const auto& r : g.rollouts) {
            if (!std::isfinite(r.old_logprob_total))
                throw InvalidInput("grpo_objective: missing old logprobs");
            if (r.completion.empty())
                throw InvalidInput("grpo_objective: empty completion");
        }
        total_rollouts += g.rollouts.size();
    }

    const double lambda = cfg.clip_kl.kl_coefficient;
    const double inv_n = 1.0 / static_cast<double>(total_rollouts);

    GrpoResult result;
    result.grad = PolicyGrad(params);
    std::vector<double> dlogits(static_cast<size_t>(params.vocab_size()));
    std::vector<double> kl_dlogits;

    for (const auto& group : groups) {
        std::vector<double> rewards;
        rewards.reserve(group.rollouts.size());
        for (const auto& r : group.rollouts) rewards.push_back(r.reward);
        AdvantageBatch adv = group_advantages(rewards);

        for (size_t i = 0; i < group.rollouts.size(); ++i) {
            const GrpoRollout& rollout = group.rollouts[i];
            std::vector<int> context(rollout.prompt.begin(), rollout.prompt.end());
            context.reserve(rollout.prompt.size() + rollout.completion.size());

            // Single pass per position: cache the forward state, collect the
            // sequence logprob and per-position KL, then backprop once the
            // surrogate coefficient is known.
            const size_t len = rollout.completion.size();
            std::vector<ForwardCache> caches;
            caches.reserve(len);
            std::vector<std::vector<double>> kl_grads;
            double lp_theta = 0.0;
            double rollout_kl = 0.0;

            for (size_t t = 0; t < len; ++t) {
                caches.push_back(forward_cache(params, context));
                const ForwardCache& cache = caches.back();
                lp_theta +=
                    std::log(cache.probs[static_cast<size_t>(rollout.completion[t])]);

                ForwardCache ref_cache = forward_cache(ref.get(), context);
                if (lambda != 0.0) {
                    kl_grads.emplace_back();
                    rollout_kl +=
                        kl_and_logit_grad(cache.probs, ref_cache.probs, &kl_grads.back());
                } else {
                    rollout_kl += kl_and_logit_grad(cache.probs, ref_cache.probs, nullptr);
                }
                context.push_back(rollout.completion[t]);
            }
            rollout_kl /= static_cast<double>(len);
            result.mean_kl += rollout_kl * inv_n;

            double ratio = std::exp(lp_theta - rollout.old_logprob_total);
            double dsurr_dlp = 0.0;
            result.surrogate +=
                surrogate_unit(ratio, adv.values[i], cfg.clip_kl.epsilon, &dsurr_dlp) *
                inv_n;
            // loss = -surrogate + lambda * KL
            const double coeff_lp = -dsurr_dlp * inv_n;
            const double coeff_kl = lambda * inv_n / static_cast<double>(len);
            if (coeff_lp == 0.0 && lambda == 0.0) continue;

            for (size_t t = 0; t < len; ++t) {
                const ForwardCache& cache = caches[t];
                const int tok = rollout.completion[t];
                for (size_t j = 0; j < dlogits.size(); ++j)
                    dlogits[j] = -coeff_lp * cache.probs[j];
                dlogits[static_cast<size_t>(tok)] += coeff_lp;
                if (lambda != 0.0)
                    for (size_t j = 0; j < dlogits.size(); ++j)
                        dlogits[j] += coeff_kl * kl_grads[t][j];
                // context holds prompt + full completion; slice the prefix
                // that was live at position t.
                backprop_position(
                    params,
                    std::span<const int>(context.data(), rollout.prompt.size() + t),
                    cache, dlogits, 0.0, result.grad);
            }
        }
    }
    result.loss = -result.surrogate + lambda * result.mean_kl;
    return result;
}

PpoResult ppo_objective(const std::vector<PpoRollout>& batch, const PpoConfig& cfg,
                        const PolicyParams& params, const ReferenceParams& ref) {
    if (batch.empty()) throw InvalidInput("ppo_objective: empty batch");
    size_t total_tokens = 0;
    for (const auto& r : batch) {
        const size_t len = r.completion.size();
        if (len == 0) throw InvalidInput("ppo_objective: empty completion");
        if (r.rewards.size() != len || r.old_logprobs.size() != len ||
            r.old_values.size() != len)
            throw InvalidInput("ppo_objective: per-token alignment violation");
        total_tokens += len;
    }

    const double lambda = cfg.clip_kl.kl_coefficient;
    const double inv_tok = 1.0 / static_cast<double>(total_tokens);
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    PpoResult result;
    result.actor_grad = PolicyGrad(params);
    result.critic_grad = PolicyGrad(params);
    std::vector<double> dlogits(static_cast<size_t>(params.vocab_size()));
    std::vector<double> kl_dlogits;

    for (const auto& rollout : batch) {
        const size_t len = rollout.completion.size();
        AdvantageBatch adv = gae_advantages(rollout.rewards, rollout.old_values, cfg);
        std::vector<double> returns = discounted_returns(rollout.rewards, cfg.gamma);

        std::vector<int> context(rollout.prompt.begin(), rollout.prompt.end());
        context.reserve(rollout.prompt.size() + len);
        double rollout_kl = 0.0;

        for (size_t t = 0; t < len; ++t) {
            std::span<const int> ctx(context.data(), context.size());
            ForwardCache cache = forward_cache(params, ctx);
            const int tok = rollout.completion[t];
            double lp_theta = std::log(cache.probs[static_cast<size_t>(tok)]);
            double ratio = std::exp(lp_theta - rollout.old_logprobs[t]);
            if (ratio <= 0) throw InvalidInput("ppo_objective: nonpositive ratio");

            double dsurr_dlp = 0.0;
            result.surrogate +=
                surrogate_unit(ratio, adv.values[t], cfg.clip_kl.epsilon, &dsurr_dlp) *
                inv_tok;

            ForwardCache ref_cache = forward_cache(ref.get(), ctx);
            double kl = kl_and_logit_grad(cache.probs, ref_cache.probs,
                                          lambda != 0.0 ? &kl_dlogits : nullptr);
            rollout_kl += kl / static_cast<double>(len);

            const double coeff_lp = -dsurr_dlp * inv_tok;  // actor loss = -surrogate + ...
            const double coeff_kl = lambda * inv_n / static_cast<double>(len);
            for (size_t j = 0; j < dlogits.size(); ++j)
                dlogits[j] = -coeff_lp * cache.probs[j];
            dlogits[static_cast<size_t>(tok)] += coeff_lp;
            if (lambda != 0.0)
                for (size_t j = 0; j < dlogits.size(); ++j)
                    dlogits[j] += coeff_kl * kl_dlogits[j];
            backprop_position(params, ctx, cache, dlogits, 0.0, result.actor_grad);

            // Critic: mean squared error of the current value estimate
            // against the empirical return.
            double value = params.value_b(0, 0);
            for (int i = 0; i < params.embed_dim(); ++i)
                value += params.value_w(0, i) * cache.hidden[i];
            double err = value - returns[t];
            result.critic_loss += err * err * inv_tok;
            backprop_position(params, ctx, cache, {}, 2.0 * err * inv_tok,
                              result.critic_grad);

            context.push_back(tok);
        }
        result.mean_kl += rollout_kl * inv_n;
    }
    result.actor_loss = -result.surrogate + lambda * result.mean_kl;
    return result;
}

}  // namespace algorithms
}  // namespace rlmtkit
