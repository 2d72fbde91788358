#include "rlmtkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "rlmtkit/errors.hpp"
#include "rlmtkit/rng.hpp"

namespace rlmtkit {
namespace trainer {

namespace {

// Seed-stream purposes, mixed into per-rollout seeds so the streams never
// collide across phases.
enum SeedPurpose : uint64_t {
    kSeedInit = 1,
    kSeedRollout = 2,
    kSeedDpoBuild = 3,
    kSeedEvalTheta = 4,
    kSeedEvalRef = 5,
};

uint64_t rollout_seed(const TrainConfig& cfg, uint64_t purpose, uint64_t step,
                      uint64_t prompt_idx, uint64_t sample_idx) {
    return mix_seed(cfg.seed ^ (purpose << 56), step, prompt_idx, sample_idx);
}

/// Runs fn(i) for i in [0, n); partitions across threads when asked. Work
/// items must be independent and write only to their own slot.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (int i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

struct WaveStats {
    double mean_reward = 0.0;
    double mean_thought_tokens = 0.0;
    double mean_response_tokens = 0.0;
    double well_formed_frac = 0.0;
};

WaveStats wave_stats(const std::vector<Rollout>& rollouts) {
    WaveStats s;
    if (rollouts.empty()) return s;
    for (const auto& r : rollouts) {
        s.mean_reward += r.reward;
        s.mean_thought_tokens += r.thought_tokens;
        s.mean_response_tokens += r.response_tokens;
        s.well_formed_frac += r.parsed.well_formed ? 1.0 : 0.0;
    }
    double n = static_cast<double>(rollouts.size());
    s.mean_reward /= n;
    s.mean_thought_tokens /= n;
    s.mean_response_tokens /= n;
    s.well_formed_frac /= n;
    return s;
}

/// Samples and parses one completion; reward is filled in later because
/// model-source floors need the whole wave.
Rollout sample_rollout(const PolicyParams& params, const Vocab& vocab,
                       const TrainConfig& cfg, const std::vector<int>& prompt_tokens,
                       uint64_t seed) {
    Rollout r;
    r.prompt_tokens = prompt_tokens;
    r.completion = sample_sequence(params, prompt_tokens, cfg.temperature,
                                   cfg.max_completion_tokens, seed);
    std::string text = vocab.decode(r.completion);
    r.parsed = chatproto::parse_output(cfg.template_kind, text);
    auto [tt, rt] = chatproto::segment_lengths(r.parsed, vocab);
    r.thought_tokens = tt;
    r.response_tokens = rt;
    return r;
}

/// Scores a wave in place. Malformed rollouts take the floor reward
/// (0 for verifier sources, wave minimum minus 1 for model sources);
/// well-formed ones get the source's shaped score.
void score_wave(std::vector<Rollout>& rollouts, const std::vector<const Task*>& tasks,
                const RewardSource& reward) {
    std::vector<double> raw(rollouts.size(), 0.0);
    for (size_t i = 0; i < rollouts.size(); ++i)
        raw[i] = reward.score(*tasks[i], rollouts[i].parsed.response).value;

    double floor = 0.0;
    if (reward.kind() == RewardKind::Model)
        floor = *std::min_element(raw.begin(), raw.end()) - 1.0;

    for (size_t i = 0; i < rollouts.size(); ++i) {
        if (!rollouts[i].parsed.well_formed) {
            rollouts[i].reward = floor;
            continue;
        }
        rollouts[i].reward = reward
                                 .score_shaped(*tasks[i], rollouts[i].parsed.response,
                                               rollouts[i].thought_tokens)
                                 .value;
    }
}

void check_reward_compat(const std::vector<Task>& prompts, const RewardSource& reward) {
    if (reward.kind() != RewardKind::Verifier) return;
    for (const auto& t : prompts)
        if (!t.gold.has_value())
            throw DataError("verifier reward source but task '" + t.prompt +
                            "' has no gold answer");
}

}  // namespace

Vocab build_vocab(TemplateKind kind, const std::vector<std::string>& texts) {
    std::vector<std::string> all = texts;
    // Whitespace is always tokenizable; zero kinds add their full template
    // text (which spells out the tag markup), warm-start thinking adds the
    // think tags completions emit.
    all.push_back(" \n");
    switch (kind) {
        case TemplateKind::ZeroThink: all.push_back(chatproto::kZeroThinkTemplate); break;
        case TemplateKind::ZeroPlain: all.push_back(chatproto::kZeroPlainTemplate); break;
        case TemplateKind::WarmstartThink: all.push_back("<think> </think>\n"); break;
        case TemplateKind::WarmstartPlain: break;
    }
    return Vocab::from_corpus(all);
}

PolicyParams make_policy(const Vocab& vocab, const TrainConfig& cfg,
                         std::string* rng_state) {
    std::mt19937_64 rng(mix_seed(cfg.seed, kSeedInit));
    PolicyParams params(vocab.size(), cfg.embed_dim);
    params.init_uniform(rng);
    if (rng_state) {
        std::ostringstream out;
        out << rng;
        *rng_state = out.str();
    }
    return params;
}

std::vector<int> tokenize_prompt(const Vocab& vocab, TemplateKind kind,
                                 const std::string& user_query, const TrainConfig& cfg) {
    std::string rendered = chatproto::render_prompt(kind, user_query);
    if (static_cast<int>(rendered.size()) > cfg.max_prompt_tokens)
        throw DataError("prompt exceeds max_prompt_tokens (" +
                        std::to_string(rendered.size()) + " > " +
                        std::to_string(cfg.max_prompt_tokens) + "): " + user_query);
    std::vector<int> tokens;
    tokens.reserve(rendered.size() + 1);
    tokens.push_back(Vocab::kBos);
    for (char c : rendered) tokens.push_back(vocab.id_of(c));
    return tokens;
}

std::vector<TokenizedDemo> tokenize_demos(const Vocab& vocab, TemplateKind kind,
                                          const std::vector<Demo>& demos,
                                          const TrainConfig& cfg) {
    std::vector<TokenizedDemo> out;
    out.reserve(demos.size());
    for (const auto& d : demos) {
        TokenizedDemo td;
        td.prompt = tokenize_prompt(vocab, kind, d.prompt, cfg);
        std::string completion = chatproto::render_completion(kind, d.thought, d.response);
        if (static_cast<int>(completion.size()) + 1 > cfg.max_completion_tokens)
            throw DataError("demo completion exceeds max_completion_tokens: " + d.prompt);
        td.target = vocab.encode(completion);
        td.target.push_back(Vocab::kEos);
        out.push_back(std::move(td));
    }
    return out;
}

SftBatchResult sft_objective(const PolicyParams& params,
                             const std::vector<TokenizedDemo>& batch) {
    if (batch.empty()) throw InvalidInput("sft_objective: empty batch");
    SftBatchResult result;
    result.grad = PolicyGrad(params);
    size_t total_tokens = 0;
    for (const auto& d : batch) total_tokens += d.target.size();
    const double inv_tok = 1.0 / static_cast<double>(total_tokens);

    for (const auto& d : batch) {
        SequenceLogProb lp = sequence_logprob(params, d.prompt, d.target);
        result.loss -= lp.total * inv_tok;
        PolicyGrad g = logprob_grad(params, d.prompt, d.target);
        result.grad.add_scaled(g, -inv_tok);
    }
    return result;
}

std::vector<MetricsRow> sft_train(PolicyParams& params, const Vocab& vocab,
                                  const std::vector<Demo>& demos, const TrainConfig& cfg) {
    cfg.validate();
    if (demos.empty()) throw InvalidInput("sft_train: no demonstrations");
    std::vector<TokenizedDemo> tokenized =
        tokenize_demos(vocab, cfg.template_kind, demos, cfg);

    // Target segment lengths, reported in the metrics for visibility.
    double mean_thought = 0.0, mean_response = 0.0;
    for (const auto& d : demos) {
        mean_thought += static_cast<double>(d.thought.size());
        mean_response += static_cast<double>(d.response.size());
    }
    mean_thought /= static_cast<double>(demos.size());
    mean_response /= static_cast<double>(demos.size());

    std::vector<MetricsRow> rows;
    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t begin = 0; begin < tokenized.size();
             begin += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(tokenized.size(),
                                  begin + static_cast<size_t>(cfg.batch_size));
            std::vector<TokenizedDemo> batch(tokenized.begin() + begin,
                                             tokenized.begin() + end);
            SftBatchResult r = sft_objective(params, batch);
            apply_gradient(params, r.grad, cfg.actor_lr);

            MetricsRow row;
            row.step = ++step;
            row.loss = r.loss;
            row.mean_thought_tokens = mean_thought;
            row.mean_response_tokens = mean_response;
            row.well_formed_frac = 1.0;
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<MetricsRow> rl_train(PolicyParams& params, const Vocab& vocab,
                                 const std::vector<Task>& prompts,
                                 const RewardSource& reward, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.algorithm != Algorithm::Ppo && cfg.algorithm != Algorithm::Grpo)
        throw InvalidInput("rl_train handles ppo/grpo; use sft_train or dpo_round");
    if (prompts.empty()) throw InvalidInput("rl_train: empty prompt set");
    check_reward_compat(prompts, reward);

    ReferenceParams ref = snapshot_reference(params);

    const int n_prompts = static_cast<int>(prompts.size());
    const int batch = std::min(cfg.batch_size, n_prompts);
    const int k = cfg.samples_per_prompt;

    // Prompt tokenizations are reused across steps.
    std::vector<std::vector<int>> prompt_tokens;
    prompt_tokens.reserve(prompts.size());
    for (const auto& t : prompts)
        prompt_tokens.push_back(tokenize_prompt(vocab, cfg.template_kind, t.prompt, cfg));

    std::vector<MetricsRow> rows;
    rows.reserve(static_cast<size_t>(cfg.steps));

    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<int> batch_prompt_idx(static_cast<size_t>(batch));
        for (int i = 0; i < batch; ++i)
            batch_prompt_idx[static_cast<size_t>(i)] =
                (step * batch + i) % n_prompts;  // cycle the dataset in order

        const int wave = batch * k;
        std::vector<Rollout> rollouts(static_cast<size_t>(wave));
        std::vector<const Task*> tasks(static_cast<size_t>(wave));
        parallel_for(wave, cfg.threads, [&](int w) {
            int i = w / k, s = w % k;
            int pi = batch_prompt_idx[static_cast<size_t>(i)];
            uint64_t seed = rollout_seed(cfg, kSeedRollout, static_cast<uint64_t>(step),
                                         static_cast<uint64_t>(pi),
                                         static_cast<uint64_t>(s));
            rollouts[static_cast<size_t>(w)] =
                sample_rollout(params, vocab, cfg, prompt_tokens[static_cast<size_t>(pi)],
                               seed);
            tasks[static_cast<size_t>(w)] = &prompts[static_cast<size_t>(pi)];
        });
        score_wave(rollouts, tasks, reward);

        MetricsRow row;
        row.step = step + 1;
        WaveStats stats = wave_stats(rollouts);
        row.mean_reward = stats.mean_reward;
        row.mean_thought_tokens = stats.mean_thought_tokens;
        row.mean_response_tokens = stats.mean_response_tokens;
        row.well_formed_frac = stats.well_formed_frac;

        if (cfg.algorithm == Algorithm::Grpo) {
            std::vector<GrpoGroup> groups(static_cast<size_t>(batch));
            for (int w = 0; w < wave; ++w) {
                const Rollout& r = rollouts[static_cast<size_t>(w)];
                GrpoRollout gr;
                gr.prompt = r.prompt_tokens;
                gr.completion = r.completion;
                gr.reward = r.reward;
                gr.old_logprob_total =
                    sequence_logprob(params, r.prompt_tokens, r.completion).total;
                groups[static_cast<size_t>(w / k)].rollouts.push_back(std::move(gr));
            }
            GrpoResult res =
                algorithms::grpo_objective(groups, cfg.grpo_config(), params, ref);
            apply_gradient(params, res.grad, cfg.actor_lr);
            row.mean_kl = res.mean_kl;
            row.loss = res.loss;
        } else {
            std::vector<PpoRollout> ppo_batch(static_cast<size_t>(wave));
            parallel_for(wave, cfg.threads, [&](int w) {
                const Rollout& r = rollouts[static_cast<size_t>(w)];
                PpoRollout pr;
                pr.prompt = r.prompt_tokens;
                pr.completion = r.completion;
                const size_t len = r.completion.size();
                pr.rewards.assign(len, 0.0);
                pr.rewards[len - 1] = r.reward;  // sequence reward arrives at the end
                pr.old_logprobs =
                    sequence_logprob(params, r.prompt_tokens, r.completion).per_token;
                pr.old_values.reserve(len);
                std::vector<int> ctx = r.prompt_tokens;
                for (size_t t = 0; t < len; ++t) {
                    pr.old_values.push_back(value_estimate(params, ctx));
                    ctx.push_back(r.completion[t]);
                }
                ppo_batch[static_cast<size_t>(w)] = std::move(pr);
            });
            PpoResult res =
                algorithms::ppo_objective(ppo_batch, cfg.ppo_config(), params, ref);
            apply_gradient(params, res.actor_grad, cfg.actor_lr);
            apply_gradient(params, res.critic_grad, cfg.critic_lr);
            row.mean_kl = res.mean_kl;
            row.loss = res.actor_loss + res.critic_loss;
        }

        rows.push_back(row);
    }
    return rows;
}

std::vector<MetricsRow> dpo_round(PolicyParams& params, const ReferenceParams& ref,
                                  const Vocab& vocab, const std::vector<Task>& prompts,
                                  const RewardSource& reward, const TrainConfig& cfg) {
    cfg.validate();
    if (prompts.empty()) throw InvalidInput("dpo_round: empty prompt set");
    check_reward_compat(prompts, reward);

    const int n_prompts = static_cast<int>(prompts.size());
    const int k = cfg.samples_per_prompt;

    // Build the preference pairs once from the pre-round policy's samples.
    std::vector<Rollout> rollouts(static_cast<size_t>(n_prompts * k));
    std::vector<const Task*> tasks(static_cast<size_t>(n_prompts * k));
    std::vector<std::vector<int>> prompt_tokens(static_cast<size_t>(n_prompts));
    for (int i = 0; i < n_prompts; ++i)
        prompt_tokens[static_cast<size_t>(i)] =
            tokenize_prompt(vocab, cfg.template_kind, prompts[static_cast<size_t>(i)].prompt,
                            cfg);
    parallel_for(n_prompts * k, cfg.threads, [&](int w) {
        int i = w / k, s = w % k;
        uint64_t seed = rollout_seed(cfg, kSeedDpoBuild, 0, static_cast<uint64_t>(i),
                                     static_cast<uint64_t>(s));
        rollouts[static_cast<size_t>(w)] = sample_rollout(
            params, vocab, cfg, prompt_tokens[static_cast<size_t>(i)], seed);
        tasks[static_cast<size_t>(w)] = &prompts[static_cast<size_t>(i)];
    });
    score_wave(rollouts, tasks, reward);
    WaveStats stats = wave_stats(rollouts);

    std::vector<PreferencePair> pairs;
    for (int i = 0; i < n_prompts; ++i) {
        std::vector<std::pair<std::vector<int>, double>> scored;
        scored.reserve(static_cast<size_t>(k));
        for (int s = 0; s < k; ++s) {
            const Rollout& r = rollouts[static_cast<size_t>(i * k + s)];
            scored.emplace_back(r.completion, r.reward);
        }
        auto pair = algorithms::build_preference_pair(
            prompt_tokens[static_cast<size_t>(i)], scored);
        if (pair) pairs.push_back(std::move(*pair));
    }
    if (pairs.empty()) throw DataError("dpo_round: no valid pairs (all rewards tied)");

    std::vector<MetricsRow> rows;
    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t begin = 0; begin < pairs.size();
             begin += static_cast<size_t>(cfg.batch_size)) {
            size_t end =
                std::min(pairs.size(), begin + static_cast<size_t>(cfg.batch_size));
            std::vector<PreferencePair> batch(pairs.begin() + begin, pairs.begin() + end);
            DpoBatchResult r = algorithms::dpo_objective(batch, cfg.dpo, params, ref);
            apply_gradient(params, r.grad, cfg.actor_lr);

            // Mean per-position KL to the reference on this batch's chosen
            // completions; DPO has no explicit KL term but the drift is
            // worth logging.
            double kl = 0.0;
            for (const auto& p : batch) {
                std::vector<int> ctx = p.prompt;
                double seq_kl = 0.0;
                for (int tok : p.chosen) {
                    seq_kl += algorithms::kl_penalty(forward_dist(params, ctx),
                                                     forward_dist(ref.get(), ctx));
                    ctx.push_back(tok);
                }
                kl += seq_kl / static_cast<double>(p.chosen.size());
            }
            kl /= static_cast<double>(batch.size());

            MetricsRow row;
            row.step = ++step;
            row.loss = r.loss;
            row.mean_kl = kl;
            row.mean_reward = stats.mean_reward;
            row.mean_thought_tokens = stats.mean_thought_tokens;
            row.mean_response_tokens = stats.mean_response_tokens;
            row.well_formed_frac = stats.well_formed_frac;
            rows.push_back(row);
        }
    }
    return rows;
}

EvalSummary evaluate(const PolicyParams& params, const PolicyParams& ref,
                     const Vocab& vocab, const std::vector<Task>& prompts,
                     const RewardSource& reward, const TrainConfig& cfg, int n_samples,
                     uint64_t seed) {
    if (prompts.empty()) throw InvalidInput("evaluate: empty prompt set");
    if (n_samples < 1) throw InvalidInput("evaluate: n_samples must be >= 1");
    check_reward_compat(prompts, reward);

    TrainConfig eval_cfg = cfg;
    eval_cfg.seed = seed;

    EvalSummary summary;
    double wins = 0.0;
    const int n = static_cast<int>(prompts.size());
    for (int i = 0; i < n; ++i) {
        std::vector<int> ptoks =
            tokenize_prompt(vocab, cfg.template_kind, prompts[static_cast<size_t>(i)].prompt,
                            cfg);
        for (int s = 0; s < n_samples; ++s) {
            uint64_t theta_seed = rollout_seed(eval_cfg, kSeedEvalTheta, 0,
                                               static_cast<uint64_t>(i),
                                               static_cast<uint64_t>(s));
            uint64_t ref_seed = rollout_seed(eval_cfg, kSeedEvalRef, 0,
                                             static_cast<uint64_t>(i),
                                             static_cast<uint64_t>(s));
            Rollout rt = sample_rollout(params, vocab, eval_cfg, ptoks, theta_seed);
            Rollout rr = sample_rollout(ref, vocab, eval_cfg, ptoks, ref_seed);

            auto score_of = [&](const Rollout& r) {
                // Format violations score zero under the verifier; model
                // sources see the best-effort response text.
                if (reward.kind() == RewardKind::Verifier && !r.parsed.well_formed)
                    return 0.0;
                return reward.score(prompts[static_cast<size_t>(i)], r.parsed.response)
                    .value;
            };
            double st = score_of(rt);
            double sr = score_of(rr);
            summary.mean_reward += st;
            summary.mean_ref_reward += sr;
            if (st > sr)
                wins += 1.0;
            else if (st == sr)
                wins += 0.5;
            summary.mean_thought_tokens += rt.thought_tokens;
            summary.mean_response_tokens += rt.response_tokens;
        }
    }
    const double total = static_cast<double>(n) * n_samples;
    summary.mean_reward /= total;
    summary.mean_ref_reward /= total;
    summary.win_rate = wins / total;
    summary.mean_thought_tokens /= total;
    summary.mean_response_tokens /= total;
    return summary;
}

RewardSource make_reward_source(const TrainConfig& cfg) {
    RewardSource source = RewardSource::verifier();
    if (cfg.reward_spec == "verifier") {
        // nothing else to do
    } else if (cfg.reward_spec.rfind("model:", 0) == 0) {
        std::string path = cfg.reward_spec.substr(6);
        if (path.empty())
            throw InvalidInput("reward spec 'model:' needs a preference file path");
        auto pairs = datasets::load_preferences(path);
        BtRewardModel rm = rewards::train_reward_model(pairs, cfg.rm_epochs, cfg.rm_lr);
        source = RewardSource::model(std::move(rm));
    } else {
        throw InvalidInput("unknown reward spec '" + cfg.reward_spec +
                           "' (use 'verifier' or 'model:<path>')");
    }
    if (cfg.length_bonus > 0.0)
        source.with_length_bonus(cfg.length_bonus, cfg.length_bonus_cap);
    return source;
}

}  // namespace trainer
}  // namespace rlmtkit
