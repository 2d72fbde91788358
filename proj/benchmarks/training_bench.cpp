#include <benchmark/benchmark.h>

#include <random>
#include <set>

#include "rlmtkit/algorithms.hpp"
#include "rlmtkit/trainer.hpp"

using namespace rlmtkit;

namespace {

std::vector<Task> bench_tasks(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::set<std::string> seen;
    std::vector<Task> tasks;
    while (static_cast<int>(tasks.size()) < n) {
        std::string d;
        for (int i = 0; i < 2; ++i) d += "0123456789"[rng() % 10];
        if (!seen.insert(d).second) continue;
        tasks.push_back({d, d});
    }
    return tasks;
}

}  // namespace

static void BM_GrpoObjective(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    std::mt19937_64 rng(11);
    PolicyParams params(16, 16);
    params.init_uniform(rng);
    ReferenceParams ref(params);

    GrpoConfig cfg;
    cfg.group_size = k;
    GrpoGroup group;
    for (int i = 0; i < k; ++i) {
        GrpoRollout r;
        r.prompt = {Vocab::kBos, 4, 5};
        for (int t = 0; t < 8; ++t)
            r.completion.push_back(static_cast<int>(rng() % 16));
        r.reward = static_cast<double>(i) / k;
        r.old_logprob_total = sequence_logprob(params, r.prompt, r.completion).total;
        group.rollouts.push_back(std::move(r));
    }
    std::vector<GrpoGroup> groups = {group};
    for (auto _ : state)
        benchmark::DoNotOptimize(algorithms::grpo_objective(groups, cfg, params, ref));
}
BENCHMARK(BM_GrpoObjective)->Arg(4)->Arg(8);

static void BM_RlTrainStep(benchmark::State& state) {
    TrainConfig cfg = TrainConfig::defaults_for(Algorithm::Grpo);
    cfg.embed_dim = 16;
    cfg.batch_size = 8;
    cfg.samples_per_prompt = 8;
    cfg.steps = 1;
    cfg.actor_lr = 0.1;
    cfg.max_completion_tokens = 16;
    cfg.seed = 3;

    std::vector<Task> tasks = bench_tasks(8, 21);
    std::vector<std::string> texts;
    for (const auto& t : tasks) texts.push_back(t.prompt);
    Vocab vocab = trainer::build_vocab(cfg.template_kind, texts);

    for (auto _ : state) {
        state.PauseTiming();
        PolicyParams params = trainer::make_policy(vocab, cfg);
        state.ResumeTiming();
        benchmark::DoNotOptimize(
            trainer::rl_train(params, vocab, tasks, RewardSource::verifier(), cfg));
    }
}
BENCHMARK(BM_RlTrainStep);
