#include "doctest.h"
#include "rlmtkit/checkpoint.hpp"
#include "rlmtkit/config.hpp"
#include "rlmtkit/datasets.hpp"
#include "rlmtkit/errors.hpp"
#include "rlmtkit/metrics.hpp"
#include "test_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace rlmtkit;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("rlmtkit_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const char* name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("config round-trips through the key-value format") {
    TrainConfig cfg = TrainConfig::defaults_for(Algorithm::Grpo);
    cfg.seed = 1234;
    cfg.actor_lr = 0.125;
    cfg.thinking = true;
    cfg.template_kind = TemplateKind::WarmstartThink;
    cfg.reward_spec = "model:/tmp/prefs.tsv";

    std::string text = config::to_key_values(cfg);
    TrainConfig back = config::parse_key_values(text, TrainConfig{});
    CHECK(back.seed == cfg.seed);
    CHECK(back.actor_lr == cfg.actor_lr);
    CHECK(back.thinking == cfg.thinking);
    CHECK(back.template_kind == cfg.template_kind);
    CHECK(back.reward_spec == cfg.reward_spec);
    CHECK(config::to_key_values(back) == text);
}

TEST_CASE("config parser reports unknown keys and bad lines with numbers") {
    CHECK_THROWS_WITH_AS(config::parse_key_values("bogus_key = 1\n", TrainConfig{}),
                         doctest::Contains("line 1"), InvalidInput);
    CHECK_THROWS_WITH_AS(config::parse_key_values("# ok\nsteps 12\n", TrainConfig{}),
                         doctest::Contains("line 2"), InvalidInput);
    CHECK_THROWS_AS(config::parse_key_values("steps = banana\n", TrainConfig{}),
                    InvalidInput);
    // Comments and blanks are fine.
    TrainConfig cfg =
        config::parse_key_values("# comment\n\nsteps = 7\n", TrainConfig{});
    CHECK(cfg.steps == 7);
}

TEST_CASE("config validation enforces the documented invariants") {
    TrainConfig cfg = TrainConfig::defaults_for(Algorithm::Grpo);
    cfg.thinking = true;  // warmstart-plain template
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg.template_kind = TemplateKind::WarmstartThink;
    CHECK_NOTHROW(cfg.validate());
    cfg.max_completion_tokens = 5000;  // over the 4096 ceiling
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("per-algorithm defaults carry the published recipe values") {
    TrainConfig sft = TrainConfig::defaults_for(Algorithm::Sft);
    CHECK(sft.actor_lr == 4e-6);
    CHECK(sft.batch_size == 16);
    CHECK(sft.epochs == 2);

    TrainConfig dpo = TrainConfig::defaults_for(Algorithm::Dpo);
    CHECK(dpo.actor_lr == 3e-7);
    CHECK(dpo.epochs == 2);
    CHECK(dpo.samples_per_prompt == 8);
    CHECK(dpo.dpo.beta == 0.1);

    TrainConfig grpo = TrainConfig::defaults_for(Algorithm::Grpo);
    CHECK(grpo.actor_lr == 1e-6);
    CHECK(grpo.critic_lr == 1e-5);
    CHECK(grpo.batch_size == 64);
    CHECK(grpo.samples_per_prompt == 8);
    CHECK(grpo.steps == 120);
    CHECK(grpo.clip_kl.kl_coefficient == 0.001);
    CHECK(grpo.clip_kl.epsilon == 0.2);
    CHECK(grpo.temperature == 0.7);
    CHECK(grpo.ppo.gamma == 1.0);
    CHECK(grpo.ppo.gae_lambda == 1.0);
    CHECK(grpo.adam_beta1 == 0.9);
    CHECK(grpo.adam_beta2 == 0.95);
    CHECK(grpo.max_prompt_tokens == 64);
    CHECK(grpo.max_completion_tokens == 256);
}

TEST_CASE("task datasets round-trip and report parse errors with line numbers") {
    TempDir dir;
    std::vector<Task> tasks = {{"sort 312", std::string("123")}, {"open ended", std::nullopt}};
    datasets::save_tasks(dir.file("tasks.tsv"), tasks);
    std::vector<Task> back = datasets::load_tasks(dir.file("tasks.tsv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].prompt == "sort 312");
    CHECK(*back[0].gold == "123");
    CHECK_FALSE(back[1].gold.has_value());

    std::ofstream bad(dir.file("bad.tsv"));
    bad << "ok\t1\n" << "a\tb\tc\td\n";
    bad.close();
    CHECK_THROWS_WITH_AS(datasets::load_tasks(dir.file("bad.tsv")),
                         doctest::Contains(":2:"), DataError);

    CHECK_THROWS_AS(datasets::load_tasks(dir.file("missing.tsv")), DataError);
    CHECK_THROWS_AS(
        datasets::save_tasks(dir.file("x.tsv"), {{"has\ttab", std::nullopt}}),
        InvalidInput);
}

TEST_CASE("preference, demo and thought corpora round-trip") {
    TempDir dir;
    std::vector<PreferenceExample> prefs = {{"p", "good", "bad"}};
    datasets::save_preferences(dir.file("prefs.tsv"), prefs);
    auto prefs_back = datasets::load_preferences(dir.file("prefs.tsv"));
    CHECK(prefs_back[0].chosen == "good");

    std::vector<Demo> demos = {{"p", "t", "r"}, {"q", "", "only response"}};
    datasets::save_demos(dir.file("demos.tsv"), demos);
    auto demos_back = datasets::load_demos(dir.file("demos.tsv"));
    REQUIRE(demos_back.size() == 2);
    CHECK(demos_back[1].thought.empty());

    std::vector<ThoughtRecord> thoughts = {{"p", "plan a"}, {"q", "plan b"}};
    datasets::save_thought_corpus(dir.file("thoughts.tsv"), thoughts);
    auto thoughts_back = datasets::load_thought_corpus(dir.file("thoughts.tsv"));
    CHECK(thoughts_back[1].thought == "plan b");
}

TEST_CASE("checkpoint save/load is bit-exact") {
    TempDir dir;
    Checkpoint ckpt;
    ckpt.vocab = Vocab("ab\n <>/");
    ckpt.config = TrainConfig::defaults_for(Algorithm::Grpo);
    ckpt.config.embed_dim = 5;
    ckpt.params = testutil::random_params(ckpt.vocab.size(), 5, 42);
    ckpt.step = 17;
    {
        std::mt19937_64 rng(99);
        std::ostringstream s;
        s << rng;
        ckpt.rng_state = s.str();
    }

    checkpoint::save(dir.file("ckpt.txt"), ckpt);
    Checkpoint back = checkpoint::load(dir.file("ckpt.txt"));

    CHECK(back.vocab == ckpt.vocab);
    CHECK(back.step == ckpt.step);
    CHECK(back.rng_state == ckpt.rng_state);
    CHECK(back.config.embed_dim == 5);

    bool identical = true;
    std::vector<const Mat*> a, b;
    ckpt.params.for_each_tensor([&](const char*, const Mat& m) { a.push_back(&m); });
    back.params.for_each_tensor([&](const char*, const Mat& m) { b.push_back(&m); });
    for (size_t t = 0; t < a.size(); ++t)
        for (size_t i = 0; i < a[t]->a.size(); ++i)
            identical = identical && a[t]->a[i] == b[t]->a[i];
    CHECK(identical);

    // Saving the loaded checkpoint reproduces the file byte for byte.
    checkpoint::save(dir.file("ckpt2.txt"), back);
    CHECK(read_file(dir.file("ckpt.txt")) == read_file(dir.file("ckpt2.txt")));
}

TEST_CASE("checkpoint header starts with the format tag") {
    TempDir dir;
    Checkpoint ckpt;
    ckpt.vocab = Vocab("a");
    ckpt.config.embed_dim = 2;
    ckpt.params = PolicyParams(ckpt.vocab.size(), 2);
    ckpt.rng_state = "1";
    checkpoint::save(dir.file("c.txt"), ckpt);
    std::string text = read_file(dir.file("c.txt"));
    CHECK(text.rfind("RLMTKIT-CKPT v1\n", 0) == 0);
}

TEST_CASE("checkpoint load rejects truncation, bad versions and bad dimensions") {
    TempDir dir;
    Checkpoint ckpt;
    ckpt.vocab = Vocab("abc");
    ckpt.config.embed_dim = 3;
    ckpt.params = testutil::random_params(ckpt.vocab.size(), 3, 7);
    ckpt.rng_state = "1";
    checkpoint::save(dir.file("good.txt"), ckpt);
    std::string text = read_file(dir.file("good.txt"));

    {
        std::ofstream out(dir.file("trunc.txt"));
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(checkpoint::load(dir.file("trunc.txt")), DataError);

    {
        std::ofstream out(dir.file("ver.txt"));
        out << "RLMTKIT-CKPT v9\n" << text.substr(text.find('\n') + 1);
    }
    CHECK_THROWS_WITH_AS(checkpoint::load(dir.file("ver.txt")),
                         doctest::Contains("version"), DataError);

    {
        std::ofstream out(dir.file("junk.txt"));
        out << "not a checkpoint\n";
    }
    CHECK_THROWS_AS(checkpoint::load(dir.file("junk.txt")), DataError);

    {
        // Claim a different tensor shape than the config implies.
        std::string bad = text;
        size_t pos = bad.find("tensor embed");
        bad.replace(pos, std::string("tensor embed 6 3").size(), "tensor embed 6 4");
        std::ofstream out(dir.file("dims.txt"));
        out << bad;
    }
    CHECK_THROWS_AS(checkpoint::load(dir.file("dims.txt")), DataError);
}

TEST_CASE("metrics csv round-trips with the exact header") {
    TempDir dir;
    std::vector<MetricsRow> rows = {{1, 0.5, 2.0, 3.0, 0.001, -0.25, 0.875},
                                    {2, 0.75, 2.5, 3.5, 0.002, -0.5, 1.0}};
    metrics::save_csv(dir.file("m.csv"), rows);
    std::string text = read_file(dir.file("m.csv"));
    CHECK(text.rfind("step,mean_reward,mean_thought_tokens,mean_response_tokens,"
                     "mean_kl,loss,well_formed_frac\n",
                     0) == 0);

    auto back = metrics::load_csv(dir.file("m.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[1].step == 2);
    CHECK(back[1].mean_reward == 0.75);
    CHECK(back[0].well_formed_frac == 0.875);

    std::ofstream bad(dir.file("bad.csv"));
    bad << metrics::kCsvHeader << "\n1,2,3\n";
    bad.close();
    CHECK_THROWS_WITH_AS(metrics::load_csv(dir.file("bad.csv")),
                         doctest::Contains("row 2"), DataError);
}
