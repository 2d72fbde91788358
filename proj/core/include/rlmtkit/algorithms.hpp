#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlmtkit/policy.hpp"

namespace rlmtkit {

/// (prompt, preferred completion, dispreferred completion) in tokens.
struct PreferencePair {
    std::vector<int> prompt;
    std::vector<int> chosen;
    std::vector<int> rejected;
};

struct DpoConfig {
    double beta = 0.1;
};

struct ClipKlConfig {
    double epsilon = 0.2;
    double kl_coefficient = 0.001;
};

struct GrpoConfig {
    int group_size = 8;
    ClipKlConfig clip_kl;
};

struct PpoConfig {
    double gamma = 1.0;
    double gae_lambda = 1.0;
    ClipKlConfig clip_kl;
};

enum class AdvantageEstimator { GroupBaseline, Gae };

/// Advantages, per rollout (group baseline) or per token (GAE).
struct AdvantageBatch {
    std::vector<double> values;
    AdvantageEstimator estimator = AdvantageEstimator::GroupBaseline;
};

/// One sampled candidate within a GRPO group. old_logprob_total is the
/// sequence log-probability under the policy that generated it.
struct GrpoRollout {
    std::vector<int> prompt;
    std::vector<int> completion;
    double reward = 0.0;
    double old_logprob_total = 0.0;
};

struct GrpoGroup {
    std::vector<GrpoRollout> rollouts;
};

struct GrpoResult {
    double loss = 0.0;       // -surrogate + kl_coefficient * mean_kl
    double surrogate = 0.0;  // mean clipped surrogate over rollouts
    double mean_kl = 0.0;    // full-distribution KL to reference, averaged per position
    PolicyGrad grad;
};

/// One rollout of a PPO batch. Rewards/old data are aligned per completion
/// token; old_values are the critic estimates at rollout time (they feed
/// GAE and stay fixed during the update).
struct PpoRollout {
    std::vector<int> prompt;
    std::vector<int> completion;
    std::vector<double> rewards;
    std::vector<double> old_logprobs;
    std::vector<double> old_values;
};

struct PpoResult {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double surrogate = 0.0;
    double mean_kl = 0.0;
    PolicyGrad actor_grad;
    PolicyGrad critic_grad;
};

struct DpoBatchResult {
    double loss = 0.0;         // mean over pairs
    double mean_margin = 0.0;  // mean beta-scaled logit difference
    PolicyGrad grad;
};

enum class PairRule { BestWorst };

namespace algorithms {

/// Picks the best-vs-worst pair by reward among one prompt's scored
/// rollouts; nullopt when the rewards are tied (max == min). Throws
/// InvalidInput with fewer than 2 rollouts.
std::optional<PreferencePair> build_preference_pair(
    std::span<const int> prompt,
    const std::vector<std::pair<std::vector<int>, double>>& scored_rollouts,
    PairRule rule = PairRule::BestWorst);

/// DPO loss for one pair given sequence logprob totals, plus its gradient
/// with respect to the two policy totals:
///   loss = -log sigmoid(beta * [(lp_theta+ - lp_theta-) - (lp_ref+ - lp_ref-)])
struct DpoLossResult {
    double loss = 0.0;
    double dloss_dlp_plus = 0.0;
    double dloss_dlp_minus = 0.0;
};
DpoLossResult dpo_loss(double lp_theta_plus, double lp_theta_minus, double lp_ref_plus,
                       double lp_ref_minus, const DpoConfig& cfg);

/// Mean DPO loss over a batch of pairs with the full parameter gradient
/// (chained through logprob_grad).
DpoBatchResult dpo_objective(const std::vector<PreferencePair>& pairs,
                             const DpoConfig& cfg, const PolicyParams& params,
                             const ReferenceParams& ref);

/// Group-centered advantages A_i = r_i - mean(r). Requires K >= 2.
AdvantageBatch group_advantages(std::span<const double> rewards);

/// Generalized advantage estimation over per-token rewards and values:
/// A_t = sum_l (gamma*lambda)^l delta_{t+l}, delta_t = r_t + gamma V_{t+1} - V_t,
/// with terminal value 0 past the last token.
AdvantageBatch gae_advantages(std::span<const double> rewards,
                              std::span<const double> values, const PpoConfig& cfg);

/// Discounted empirical returns G_t = sum_{l>=0} gamma^l r_{t+l}.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

/// Mean over units of min(rho*A, clip(rho, 1-eps, 1+eps)*A), with the ratio
/// clipped on both sides when A < 0 so |objective| never exceeds
/// (1+eps) * max|A| however far the ratios drift.
double clipped_surrogate(std::span<const double> ratios, std::span<const double> advantages,
                         double epsilon);

/// KL(p_theta || p_ref) between two distributions over the vocabulary.
/// Nonnegative; zero ref mass where theta has mass is an error.
double kl_penalty(std::span<const double> dist_theta, std::span<const double> dist_ref);

/// GRPO objective over rollout groups:
///   loss = -[clipped surrogate of sequence-level ratios with group-centered
///   advantages] + kl_coefficient * KL(pi_theta || pi_ref)
/// with the analytic gradient over all policy parameters.
GrpoResult grpo_objective(const std::vector<GrpoGroup>& groups, const GrpoConfig& cfg,
                          const PolicyParams& params, const ReferenceParams& ref);

/// PPO objective over a rollout batch: clipped surrogate on per-token
/// ratios with GAE advantages plus the KL penalty (actor), and mean squared
/// error of current value estimates against empirical returns (critic).
PpoResult ppo_objective(const std::vector<PpoRollout>& batch, const PpoConfig& cfg,
                        const PolicyParams& params, const ReferenceParams& ref);

}  // namespace algorithms
}  // namespace rlmtkit
