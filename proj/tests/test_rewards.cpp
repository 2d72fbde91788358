#include "doctest.h"
#include "rlmtkit/errors.hpp"
#include "rlmtkit/rewards.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace rlmtkit;
using namespace rlmtkit::rewards;

namespace {

/// Synthetic preference corpus: chosen responses are the prompt's digits
/// sorted, rejected ones are a non-sorted shuffle.
std::vector<PreferenceExample> sorted_vs_shuffled(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<PreferenceExample> pairs;
    while (static_cast<int>(pairs.size()) < n) {
        std::string digits = testutil::random_text(6, "0123456789", rng);
        std::string sorted = digits;
        std::sort(sorted.begin(), sorted.end());
        std::string shuffled = sorted;
        for (size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng() % i]);
        if (shuffled == sorted) continue;
        pairs.push_back({digits, sorted, shuffled});
    }
    return pairs;
}

}  // namespace

TEST_CASE("verify_exact is an indicator under trim/collapse normalization") {
    CHECK(verify_exact("123", "123").value == 1.0);
    CHECK(verify_exact("132", "123").value == 0.0);
    CHECK(verify_exact(" 123 ", "123").value == 1.0);
    CHECK(verify_exact("1  2   3", "1 2 3").value == 1.0);
    CHECK(verify_exact("", "").value == 1.0);
    CHECK(verify_exact("  ", "").value == 1.0);
    CHECK(verify_exact("123", "123").source == RewardKind::Verifier);
}

TEST_CASE("verifier is symmetric and idempotent under normalization") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 200; ++i) {
        std::string a = testutil::random_text(1 + static_cast<int>(rng() % 8),
                                              "01 2", rng);
        std::string b = testutil::random_text(1 + static_cast<int>(rng() % 8),
                                              "01 2", rng);
        CHECK(verify_exact(a, b).value == verify_exact(b, a).value);
        CHECK(verify_exact(normalize_answer(a), normalize_answer(b)).value ==
              verify_exact(a, b).value);
        CHECK(normalize_answer(normalize_answer(a)) == normalize_answer(a));
    }
}

TEST_CASE("featurize computes the documented feature vector") {
    FeatureVector empty = featurize("abc", "");
    CHECK(empty[0] == 1.0);  // bias
    CHECK(empty[1] == 0.0);  // length
    CHECK(empty[2] == 0.0);  // echo
    CHECK(empty[3] == 0.0);  // sorted run
    CHECK(empty[4] == 0.0);  // distinct

    FeatureVector echo = featurize("abc", "abc");
    CHECK(echo[2] == 1.0);

    FeatureVector sorted = featurize("", "1234");
    CHECK(sorted[3] == 1.0);
    CHECK(sorted[1] == 4.0);
    CHECK(sorted[4] == 1.0);

    FeatureVector partial = featurize("ab", "ba21");
    CHECK(partial[2] == 1.0);             // both prompt chars echoed
    CHECK(partial[3] == doctest::Approx(0.25));  // no run longer than 1
    CHECK(partial[4] == 1.0);

    FeatureVector repeats = featurize("xy", "aaaa");
    CHECK(repeats[2] == 0.0);
    CHECK(repeats[3] == 1.0);  // constant strings are non-decreasing
    CHECK(repeats[4] == doctest::Approx(0.25));
}

TEST_CASE("score_reward_model is linear in the weights") {
    BtRewardModel w1, w2;
    std::mt19937_64 rng(3);
    for (int i = 0; i < kRewardFeatureCount; ++i) {
        w1.weights[static_cast<size_t>(i)] = uniform_range(rng, -1, 1);
        w2.weights[static_cast<size_t>(i)] = uniform_range(rng, -1, 1);
    }
    BtRewardModel sum;
    for (int i = 0; i < kRewardFeatureCount; ++i)
        sum.weights[static_cast<size_t>(i)] =
            w1.weights[static_cast<size_t>(i)] + w2.weights[static_cast<size_t>(i)];

    double s1 = score_reward_model(w1, "12", "21").value;
    double s2 = score_reward_model(w2, "12", "21").value;
    double s = score_reward_model(sum, "12", "21").value;
    CHECK(s == doctest::Approx(s1 + s2).epsilon(1e-12));

    BtRewardModel zero;
    CHECK(score_reward_model(zero, "anything", "else").value == 0.0);
    CHECK(score_reward_model(zero, "x", "y").source == RewardKind::Model);

    BtRewardModel bad;
    bad.weights.resize(2);
    CHECK_THROWS_AS(score_reward_model(bad, "x", "y"), InvalidInput);
}

TEST_CASE("reward model only sees the response features") {
    // Same features => same score regardless of other text content.
    BtRewardModel rm;
    rm.weights = {0.5, 0.1, 0.2, 1.0, -0.3};
    FeatureVector fa = featurize("12", "112");
    FeatureVector fb = featurize("21", "211");
    if (fa == fb)
        CHECK(score_reward_model(rm, "12", "112").value ==
              score_reward_model(rm, "21", "211").value);
    // And a direct identity: score equals the dot product of the features.
    double expect = 0.0;
    FeatureVector f = featurize("977", "779");
    for (int i = 0; i < kRewardFeatureCount; ++i)
        expect += rm.weights[static_cast<size_t>(i)] * f[static_cast<size_t>(i)];
    CHECK(score_reward_model(rm, "977", "779").value == doctest::Approx(expect));
}

TEST_CASE("train_reward_model leaves weights at zero for degenerate pairs") {
    std::vector<PreferenceExample> ties = {{"12", "21", "21"}, {"34", "43", "43"}};
    BtRewardModel rm = train_reward_model(ties, 50, 0.1);
    for (double w : rm.weights) CHECK(w == 0.0);
}

TEST_CASE("train_reward_model fits separable pairs below ln 2") {
    auto pairs = sorted_vs_shuffled(200, 5);
    BtRewardModel rm = train_reward_model(pairs, 500, 0.5);
    CHECK(bt_loss(rm, pairs) < std::log(2.0));
}

TEST_CASE("bt training achieves high held-out accuracy on the synthetic corpus") {
    auto train = sorted_vs_shuffled(500, 7);
    auto held_out = sorted_vs_shuffled(200, 8);
    BtRewardModel rm = train_reward_model(train, 2000, 0.5);
    CHECK(bt_pairwise_accuracy(rm, held_out) >= 0.95);
    // The fitted model prefers sorted over shuffled responses.
    int prefer = 0;
    for (const auto& p : held_out)
        if (score_reward_model(rm, p.prompt, p.chosen).value >
            score_reward_model(rm, p.prompt, p.rejected).value)
            ++prefer;
    CHECK(static_cast<double>(prefer) / static_cast<double>(held_out.size()) >= 0.95);
}

TEST_CASE("bt full-batch descent never increases the loss at small lr") {
    auto pairs = sorted_vs_shuffled(100, 9);
    double prev = bt_loss(BtRewardModel{}, pairs);
    BtRewardModel rm;
    for (int epoch = 1; epoch <= 200; ++epoch) {
        rm = train_reward_model(pairs, epoch, 1e-3);
        double now = bt_loss(rm, pairs);
        CHECK(now <= prev + 1e-12);
        prev = now;
    }
}

TEST_CASE("train_reward_model rejects an empty pair set") {
    CHECK_THROWS_AS(train_reward_model({}, 10, 0.1), InvalidInput);
}

TEST_CASE("shaped_length_reward adds a capped bonus") {
    RewardSignal base{1.0, RewardKind::Verifier};
    RewardSignal same = shaped_length_reward(base, 10, 0.0, 50);
    CHECK(same.value == 1.0);

    RewardSignal shaped = shaped_length_reward(base, 10, 0.01, 50);
    CHECK(shaped.value == doctest::Approx(1.10));
    CHECK(shaped.source == RewardKind::Shaped);

    RewardSignal capped = shaped_length_reward(base, 500, 0.01, 50);
    CHECK(capped.value == doctest::Approx(1.50));
    CHECK(shaped_length_reward(base, 50, 0.01, 50).value == doctest::Approx(1.50));
    CHECK_THROWS_AS(shaped_length_reward(base, 5, -0.1, 50), InvalidInput);
}

TEST_CASE("RewardSource dispatches verifier and model scoring") {
    Task verifiable{"12", std::string("12")};
    Task open_ended{"12", std::nullopt};

    RewardSource v = RewardSource::verifier();
    CHECK(v.score(verifiable, "12").value == 1.0);
    CHECK(v.score(verifiable, "21").value == 0.0);
    CHECK_THROWS_AS(v.score(open_ended, "12"), InvalidInput);

    BtRewardModel rm;
    rm.weights = {0.0, 1.0, 0.0, 0.0, 0.0};  // score = response length
    RewardSource m = RewardSource::model(rm);
    CHECK(m.score(open_ended, "abc").value == 3.0);

    m.with_length_bonus(0.1, 4);
    CHECK(m.score_shaped(open_ended, "abc", 2).value == doctest::Approx(3.2));
    CHECK(m.score_shaped(open_ended, "abc", 9).value == doctest::Approx(3.4));
}
