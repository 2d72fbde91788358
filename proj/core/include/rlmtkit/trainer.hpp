#pragma once

#include <string>
#include <vector>

#include "rlmtkit/algorithms.hpp"
#include "rlmtkit/chatproto.hpp"
#include "rlmtkit/config.hpp"
#include "rlmtkit/datasets.hpp"
#include "rlmtkit/metrics.hpp"
#include "rlmtkit/policy.hpp"
#include "rlmtkit/rewards.hpp"

namespace rlmtkit {

struct EvalSummary {
    double mean_reward = 0.0;
    double mean_ref_reward = 0.0;
    double win_rate = 0.0;  // ties count half
    double mean_thought_tokens = 0.0;
    double mean_response_tokens = 0.0;
};

/// Demo tokenized against a vocab: prompt context and completion target.
struct TokenizedDemo {
    std::vector<int> prompt;  // BOS + rendered prompt
    std::vector<int> target;  // rendered completion + EOS
};

struct SftBatchResult {
    double loss = 0.0;  // token-level cross-entropy over the batch
    PolicyGrad grad;
};

/// One sampled, parsed, and scored completion.
struct Rollout {
    std::vector<int> prompt_tokens;
    std::vector<int> completion;
    ParsedOutput parsed;
    double reward = 0.0;
    int thought_tokens = 0;
    int response_tokens = 0;
};

namespace trainer {

/// Character vocabulary covering the rendered template, tag markup, and
/// every text the run touches (prompts, golds, demos).
Vocab build_vocab(TemplateKind kind, const std::vector<std::string>& texts);

/// Fresh policy initialized uniform(-0.05, 0.05) from cfg.seed; the RNG
/// state after initialization is returned through rng_state for
/// checkpointing.
PolicyParams make_policy(const Vocab& vocab, const TrainConfig& cfg,
                         std::string* rng_state = nullptr);

/// BOS + encoded rendered prompt; DataError if over cfg.max_prompt_tokens.
std::vector<int> tokenize_prompt(const Vocab& vocab, TemplateKind kind,
                                 const std::string& user_query, const TrainConfig& cfg);

std::vector<TokenizedDemo> tokenize_demos(const Vocab& vocab, TemplateKind kind,
                                          const std::vector<Demo>& demos,
                                          const TrainConfig& cfg);

/// Token-level cross-entropy on completion tokens (prompt positions are
/// masked by construction) with its analytic parameter gradient.
SftBatchResult sft_objective(const PolicyParams& params,
                             const std::vector<TokenizedDemo>& batch);

/// Supervised fine-tuning: cfg.epochs passes of minibatch gradient descent
/// over the demos. Returns one metrics row per optimizer step.
std::vector<MetricsRow> sft_train(PolicyParams& params, const Vocab& vocab,
                                  const std::vector<Demo>& demos, const TrainConfig& cfg);

/// On-policy RL (PPO or GRPO per cfg.algorithm): each step samples
/// cfg.samples_per_prompt completions per prompt at cfg.temperature,
/// parses and scores them, and applies one gradient update. The reference
/// is snapshotted once at entry. Malformed rollouts receive the floor
/// reward (0 for verifier sources, batch minimum minus 1 for model
/// sources) rather than crashing.
std::vector<MetricsRow> rl_train(PolicyParams& params, const Vocab& vocab,
                                 const std::vector<Task>& prompts,
                                 const RewardSource& reward, const TrainConfig& cfg);

/// On-policy DPO: preference pairs are built once from the pre-round
/// policy's samples (best-vs-worst of cfg.samples_per_prompt by reward),
/// then cfg.epochs of minibatch DPO descent run over those fixed pairs.
std::vector<MetricsRow> dpo_round(PolicyParams& params, const ReferenceParams& ref,
                                  const Vocab& vocab, const std::vector<Task>& prompts,
                                  const RewardSource& reward, const TrainConfig& cfg);

/// Samples n_samples per prompt from both policies on disjoint seed
/// streams and scores responses; win = theta's sample outscores ref's,
/// ties counting half. Deterministic given seed.
EvalSummary evaluate(const PolicyParams& params, const PolicyParams& ref,
                     const Vocab& vocab, const std::vector<Task>& prompts,
                     const RewardSource& reward, const TrainConfig& cfg, int n_samples,
                     uint64_t seed);

/// Builds the reward source named by cfg.reward_spec ("verifier" or
/// "model:<preference.tsv>", fitting the Bradley-Terry model on the file),
/// applying cfg.length_bonus shaping when nonzero.
RewardSource make_reward_source(const TrainConfig& cfg);

}  // namespace trainer
}  // namespace rlmtkit
