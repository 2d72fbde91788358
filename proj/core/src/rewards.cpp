#include "rlmtkit/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {
namespace rewards {

std::string normalize_answer(std::string_view text) {
    const char* ws = " \t\r\n";
    size_t b = text.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    size_t e = text.find_last_not_of(ws);
    std::string_view core = text.substr(b, e - b + 1);

    std::string out;
    out.reserve(core.size());
    bool in_space = false;
    for (char c : core) {
        if (c == ' ') {
            if (!in_space) out += ' ';
            in_space = true;
        } else {
            out += c;
            in_space = false;
        }
    }
    return out;
}

RewardSignal verify_exact(std::string_view response, std::string_view gold) {
    double v = normalize_answer(response) == normalize_answer(gold) ? 1.0 : 0.0;
    return {v, RewardKind::Verifier};
}

FeatureVector featurize(std::string_view prompt, std::string_view response) {
    FeatureVector f{};
    f[0] = 1.0;
    f[1] = static_cast<double>(response.size());

    std::set<char> prompt_chars(prompt.begin(), prompt.end());
    std::set<char> response_chars(response.begin(), response.end());
    if (!prompt_chars.empty()) {
        int echoed = 0;
        for (char c : prompt_chars)
            if (response_chars.count(c)) ++echoed;
        f[2] = static_cast<double>(echoed) / static_cast<double>(prompt_chars.size());
    }

    if (!response.empty()) {
        size_t longest = 1, run = 1;
        for (size_t i = 1; i < response.size(); ++i) {
            run = response[i] >= response[i - 1] ? run + 1 : 1;
            longest = std::max(longest, run);
        }
        f[3] = static_cast<double>(longest) / static_cast<double>(response.size());
        f[4] = static_cast<double>(response_chars.size()) /
               static_cast<double>(response.size());
    }
    return f;
}

RewardSignal score_reward_model(const BtRewardModel& rm, std::string_view prompt,
                                std::string_view response) {
    if (rm.weights.size() != kRewardFeatureCount)
        throw InvalidInput("score_reward_model: weight/feature dimension mismatch");
    FeatureVector f = featurize(prompt, response);
    double s = 0.0;
    for (int i = 0; i < kRewardFeatureCount; ++i) s += rm.weights[i] * f[i];
    return {s, RewardKind::Model};
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Numerically stable -log sigmoid(m) = log(1 + exp(-m)).
double neg_log_sigmoid(double m) {
    if (m > 0) return std::log1p(std::exp(-m));
    return -m + std::log1p(std::exp(m));
}

}  // namespace

double bt_loss(const BtRewardModel& rm, const std::vector<PreferenceExample>& pairs) {
    if (pairs.empty()) throw InvalidInput("bt_loss: empty pair set");
    double total = 0.0;
    for (const auto& p : pairs) {
        double margin = score_reward_model(rm, p.prompt, p.chosen).value -
                        score_reward_model(rm, p.prompt, p.rejected).value;
        total += neg_log_sigmoid(margin);
    }
    return total / static_cast<double>(pairs.size());
}

double bt_pairwise_accuracy(const BtRewardModel& rm,
                            const std::vector<PreferenceExample>& pairs) {
    if (pairs.empty()) throw InvalidInput("bt_pairwise_accuracy: empty pair set");
    double correct = 0.0;
    for (const auto& p : pairs) {
        double margin = score_reward_model(rm, p.prompt, p.chosen).value -
                        score_reward_model(rm, p.prompt, p.rejected).value;
        if (margin > 0)
            correct += 1.0;
        else if (margin == 0)
            correct += 0.5;
    }
    return correct / static_cast<double>(pairs.size());
}

BtRewardModel train_reward_model(const std::vector<PreferenceExample>& pairs, int epochs,
                                 double lr) {
    if (pairs.empty()) throw InvalidInput("train_reward_model: empty pair set");

    BtRewardModel rm;
    const double inv_n = 1.0 / static_cast<double>(pairs.size());

    // Feature differences are constant across epochs; precompute them.
    std::vector<FeatureVector> diffs;
    diffs.reserve(pairs.size());
    for (const auto& p : pairs) {
        FeatureVector fc = featurize(p.prompt, p.chosen);
        FeatureVector fr = featurize(p.prompt, p.rejected);
        FeatureVector d{};
        for (int i = 0; i < kRewardFeatureCount; ++i) d[i] = fc[i] - fr[i];
        diffs.push_back(d);
    }

    for (int epoch = 0; epoch < epochs; ++epoch) {
        FeatureVector grad{};
        for (const auto& d : diffs) {
            double margin = 0.0;
            for (int i = 0; i < kRewardFeatureCount; ++i) margin += rm.weights[i] * d[i];
            double coeff = (sigmoid(margin) - 1.0) * inv_n;  // d(-log sigmoid)/d margin
            for (int i = 0; i < kRewardFeatureCount; ++i) grad[i] += coeff * d[i];
        }
        for (int i = 0; i < kRewardFeatureCount; ++i) rm.weights[i] -= lr * grad[i];
    }
    return rm;
}

RewardSignal shaped_length_reward(RewardSignal base, int thought_tokens,
                                  double bonus_per_token, int cap) {
    if (bonus_per_token < 0)
        throw InvalidInput("shaped_length_reward: negative bonus_per_token");
    double bonus = bonus_per_token * static_cast<double>(std::min(thought_tokens, cap));
    return {base.value + bonus, RewardKind::Shaped};
}

}  // namespace rewards

RewardSource RewardSource::verifier() {
    RewardSource s;
    s.kind_ = RewardKind::Verifier;
    return s;
}

RewardSource RewardSource::model(BtRewardModel rm) {
    RewardSource s;
    s.kind_ = RewardKind::Model;
    s.rm_ = std::move(rm);
    return s;
}

RewardSource& RewardSource::with_length_bonus(double bonus_per_token, int cap) {
    if (bonus_per_token < 0)
        throw InvalidInput("RewardSource: negative length bonus");
    bonus_per_token_ = bonus_per_token;
    bonus_cap_ = cap;
    return *this;
}

const BtRewardModel& RewardSource::reward_model() const {
    if (kind_ != RewardKind::Model)
        throw InvalidInput("RewardSource: not a model-based source");
    return rm_;
}

RewardSignal RewardSource::score(const Task& task, std::string_view response) const {
    if (kind_ == RewardKind::Verifier) {
        if (!task.gold.has_value())
            throw InvalidInput("RewardSource: verifier task is missing gold");
        return rewards::verify_exact(response, *task.gold);
    }
    return rewards::score_reward_model(rm_, task.prompt, response);
}

RewardSignal RewardSource::score_shaped(const Task& task, std::string_view response,
                                        int thought_tokens) const {
    RewardSignal base = score(task, response);
    if (bonus_per_token_ <= 0.0) return base;
    return rewards::shaped_length_reward(base, thought_tokens, bonus_per_token_, bonus_cap_);
}

}  // namespace rlmtkit
