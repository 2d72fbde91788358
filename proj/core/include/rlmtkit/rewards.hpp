#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rlmtkit {

/// One prompt of a dataset. Verifiable tasks carry a gold answer;
/// open-ended tasks do not.
struct Task {
    std::string prompt;
    std::optional<std::string> gold;
};

enum class RewardKind { Verifier, Model, Shaped };

struct RewardSignal {
    double value = 0.0;
    RewardKind source = RewardKind::Verifier;
};

/// Number of response features the linear reward model scores:
/// [bias, response length, prompt-echo fraction, longest sorted-run
/// fraction, distinct-token fraction].
inline constexpr int kRewardFeatureCount = 5;

using FeatureVector = std::array<double, kRewardFeatureCount>;

/// Linear Bradley-Terry reward model over response features. The feature
/// spec version is fixed per instance so persisted weights cannot be
/// applied to a different featurization.
struct BtRewardModel {
    std::vector<double> weights;
    int feature_version = 1;

    BtRewardModel() : weights(kRewardFeatureCount, 0.0) {}
};

struct PreferenceExample {
    std::string prompt;
    std::string chosen;
    std::string rejected;
};

namespace rewards {

/// Verifier normalization: trims surrounding whitespace and collapses
/// internal runs of spaces.
std::string normalize_answer(std::string_view text);

/// Exact-match indicator against the gold answer under normalization.
RewardSignal verify_exact(std::string_view response, std::string_view gold);

/// Fixed-length response features; see kRewardFeatureCount for the layout.
/// Tokens are characters (the policy vocabulary is character-level).
FeatureVector featurize(std::string_view prompt, std::string_view response);

/// Linear score <weights, featurize(prompt, response)>.
RewardSignal score_reward_model(const BtRewardModel& rm, std::string_view prompt,
                                std::string_view response);

/// Mean negative log-likelihood of the Bradley-Terry preference model,
/// -log sigmoid(score(chosen) - score(rejected)), on the given pairs.
double bt_loss(const BtRewardModel& rm, const std::vector<PreferenceExample>& pairs);

/// Fraction of pairs where the model scores chosen strictly above rejected
/// (ties count half).
double bt_pairwise_accuracy(const BtRewardModel& rm,
                            const std::vector<PreferenceExample>& pairs);

/// Fits the Bradley-Terry model by full-batch gradient descent from zero
/// weights; one gradient step per epoch. Throws InvalidInput on an empty
/// pair set.
BtRewardModel train_reward_model(const std::vector<PreferenceExample>& pairs, int epochs,
                                 double lr);

/// Adds bonus_per_token * min(thought_tokens, cap) to the base signal.
RewardSignal shaped_length_reward(RewardSignal base, int thought_tokens,
                                  double bonus_per_token, int cap);

}  // namespace rewards

/// Reward source for training runs: either the exact-match verifier or a
/// Bradley-Terry reward model, with optional thought-length shaping.
class RewardSource {
public:
    static RewardSource verifier();
    static RewardSource model(BtRewardModel rm);

    RewardSource& with_length_bonus(double bonus_per_token, int cap);

    RewardKind kind() const { return kind_; }
    bool has_length_bonus() const { return bonus_per_token_ > 0.0; }
    const BtRewardModel& reward_model() const;

    /// Base score of a response for a task. Verifier sources require the
    /// task to carry gold (InvalidInput otherwise).
    RewardSignal score(const Task& task, std::string_view response) const;

    /// Base score plus the configured length bonus.
    RewardSignal score_shaped(const Task& task, std::string_view response,
                              int thought_tokens) const;

private:
    RewardKind kind_ = RewardKind::Verifier;
    BtRewardModel rm_;
    double bonus_per_token_ = 0.0;
    int bonus_cap_ = 0;
};

}  // namespace rlmtkit
