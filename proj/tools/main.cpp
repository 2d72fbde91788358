// rlmtkit command-line entry point: SFT warm-start, RL training (DPO/PPO/
// GRPO), evaluation, metrics plotting, and trait analysis over two thought
// corpora.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "rlmtkit/checkpoint.hpp"
#include "rlmtkit/config.hpp"
#include "rlmtkit/datasets.hpp"
#include "rlmtkit/errors.hpp"
#include "rlmtkit/metrics.hpp"
#include "rlmtkit/trainer.hpp"
#include "rlmtkit/traitlab.hpp"

namespace fs = std::filesystem;
using namespace rlmtkit;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOpts {
    std::string config_path;
    int64_t seed = -1;  // -1: not set on the command line
    int threads = 0;    // 0: not set
    bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "flat key = value config file");
    cmd->add_option("--seed", opts.seed, "seed override");
    cmd->add_option("--threads", opts.threads, "worker threads (default 1)");
    cmd->add_flag("--print-config", opts.print_config,
                  "print the fully resolved config and exit");
}

/// Resolution order: per-algorithm defaults, RLMTKIT_SEED env fallback,
/// config file, then command-line overrides.
TrainConfig resolve_config(Algorithm algo, const CommonOpts& opts) {
    TrainConfig cfg = TrainConfig::defaults_for(algo);
    if (const char* env = std::getenv("RLMTKIT_SEED")) {
        try {
            cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw InvalidInput("RLMTKIT_SEED is not an integer");
        }
    }
    if (!opts.config_path.empty()) cfg = config::load_file(opts.config_path, cfg);
    cfg.algorithm = algo;  // the subcommand wins over the config file
    if (opts.seed >= 0) cfg.seed = static_cast<uint64_t>(opts.seed);
    if (opts.threads > 0) cfg.threads = opts.threads;
    return cfg;
}

bool maybe_print_config(const TrainConfig& cfg, const CommonOpts& opts) {
    if (!opts.print_config) return false;
    std::cout << config::to_key_values(cfg);
    return true;
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out))
        throw DataError("cannot create output directory: " + out);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << text;
    if (!f) throw DataError("write failure: " + path);
}

/// Dataset characters a warm-started checkpoint's vocab cannot tokenize.
void check_vocab_covers(const Vocab& vocab, const std::vector<Task>& tasks,
                        TemplateKind kind) {
    std::set<char> missing;
    auto scan = [&](const std::string& text) {
        for (char c : text)
            if (!vocab.contains(c)) missing.insert(c);
    };
    for (const auto& t : tasks) {
        scan(chatproto::render_prompt(kind, t.prompt));
        if (t.gold) scan(*t.gold);
    }
    if (!missing.empty()) {
        std::string list;
        for (char c : missing) list += std::string(list.empty() ? "" : " ") + "'" + c + "'";
        throw DataError("checkpoint vocab does not cover dataset characters: " + list);
    }
}

std::string summary_line(const std::string& label, const EvalSummary& s) {
    std::ostringstream out;
    out << label << ": mean_reward=" << s.mean_reward
        << " ref_mean_reward=" << s.mean_ref_reward << " win_rate_vs_ref=" << s.win_rate
        << " mean_thought_tokens=" << s.mean_thought_tokens
        << " mean_response_tokens=" << s.mean_response_tokens;
    return out.str();
}

Checkpoint make_checkpoint(const Vocab& vocab, const PolicyParams& params,
                           const TrainConfig& cfg, int64_t step,
                           const std::string& rng_state) {
    Checkpoint ckpt;
    ckpt.vocab = vocab;
    ckpt.params = params;
    ckpt.config = cfg;
    ckpt.step = step;
    ckpt.rng_state = rng_state.empty() ? "0" : rng_state;
    return ckpt;
}

// ---------------------------------------------------------------------------
// sft

struct SftArgs {
    CommonOpts common;
    std::string demos_path;
    std::string out_dir;
    bool thinking = false;
    int epochs = 0;
};

int run_sft(const SftArgs& args) {
    TrainConfig cfg = resolve_config(Algorithm::Sft, args.common);
    if (args.thinking) {
        cfg.thinking = true;
        cfg.template_kind = TemplateKind::WarmstartThink;
    }
    if (args.epochs > 0) cfg.epochs = args.epochs;
    if (maybe_print_config(cfg, args.common)) return 0;
    cfg.validate();

    std::vector<Demo> demos = datasets::load_demos(args.demos_path);
    std::vector<std::string> texts;
    for (const auto& d : demos) {
        texts.push_back(chatproto::render_completion(cfg.template_kind, d.thought,
                                                     d.response));
        texts.push_back(d.prompt);
    }
    Vocab vocab = trainer::build_vocab(cfg.template_kind, texts);

    std::string rng_state;
    PolicyParams params = trainer::make_policy(vocab, cfg, &rng_state);
    std::vector<MetricsRow> rows = trainer::sft_train(params, vocab, demos, cfg);

    ensure_out_dir(args.out_dir);
    metrics::save_csv(args.out_dir + "/metrics.csv", rows);
    checkpoint::save(args.out_dir + "/checkpoint.txt",
                     make_checkpoint(vocab, params, cfg,
                                     static_cast<int64_t>(rows.size()), rng_state));
    std::cout << "sft: " << rows.size() << " steps, final loss "
              << (rows.empty() ? 0.0 : rows.back().loss) << "\n";
    std::cout << "wrote " << args.out_dir << "/checkpoint.txt\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    CommonOpts common;
    std::string algo;
    std::string mode = "warmstart";
    bool thinking = false;
    bool no_thinking = false;
    std::string checkpoint_in;
    std::string prompts_path;
    std::string eval_prompts_path;
    std::string out_dir;
};

int run_train(const TrainArgs& args) {
    Algorithm algo = algorithm_from_name(args.algo);
    if (algo == Algorithm::Sft)
        throw InvalidInput("train: use the sft subcommand for supervised warm-start");
    if (args.mode != "warmstart" && args.mode != "zero")
        throw InvalidInput("train: --mode must be warmstart or zero");
    if (args.thinking && args.no_thinking)
        throw InvalidInput("train: --thinking conflicts with --no-thinking");

    TrainConfig cfg = resolve_config(algo, args.common);
    const bool zero = args.mode == "zero";
    bool thinking = cfg.thinking;
    if (args.thinking) thinking = true;
    if (args.no_thinking) thinking = false;
    cfg.thinking = thinking;
    cfg.template_kind = zero ? (thinking ? TemplateKind::ZeroThink : TemplateKind::ZeroPlain)
                             : (thinking ? TemplateKind::WarmstartThink
                                         : TemplateKind::WarmstartPlain);
    if (maybe_print_config(cfg, args.common)) return 0;

    if (zero && !args.checkpoint_in.empty())
        throw InvalidInput("train: --mode zero starts from fresh parameters; "
                           "--checkpoint-in is only for warmstart mode");
    if (!zero && args.checkpoint_in.empty())
        throw InvalidInput("train: --mode warmstart requires --checkpoint-in");

    std::vector<Task> prompts = datasets::load_tasks(args.prompts_path);

    Vocab vocab;
    PolicyParams params;
    std::string rng_state = "0";
    if (zero) {
        std::vector<std::string> texts;
        for (const auto& t : prompts) {
            texts.push_back(t.prompt);
            if (t.gold) texts.push_back(*t.gold);
        }
        vocab = trainer::build_vocab(cfg.template_kind, texts);
        params = trainer::make_policy(vocab, cfg, &rng_state);
    } else {
        Checkpoint ckpt = checkpoint::load(args.checkpoint_in);
        vocab = ckpt.vocab;
        params = std::move(ckpt.params);
        rng_state = ckpt.rng_state;
        cfg.embed_dim = params.embed_dim();
        check_vocab_covers(vocab, prompts, cfg.template_kind);
    }
    cfg.validate();

    RewardSource reward = trainer::make_reward_source(cfg);

    std::vector<MetricsRow> rows;
    ReferenceParams ref = snapshot_reference(params);
    if (algo == Algorithm::Dpo) {
        rows = trainer::dpo_round(params, ref, vocab, prompts, reward, cfg);
    } else {
        rows = trainer::rl_train(params, vocab, prompts, reward, cfg);
    }

    std::vector<Task> eval_prompts = prompts;
    if (!args.eval_prompts_path.empty())
        eval_prompts = datasets::load_tasks(args.eval_prompts_path);
    EvalSummary summary =
        trainer::evaluate(params, ref.get(), vocab, eval_prompts, reward, cfg,
                          cfg.eval_samples, cfg.seed);

    ensure_out_dir(args.out_dir);
    metrics::save_csv(args.out_dir + "/metrics.csv", rows);
    checkpoint::save(args.out_dir + "/checkpoint.txt",
                     make_checkpoint(vocab, params, cfg,
                                     static_cast<int64_t>(rows.size()), rng_state));
    std::string line = summary_line("final_eval", summary);
    write_text(args.out_dir + "/eval_summary.txt", line + "\n");
    std::cout << line << "\n";
    std::cout << "wrote " << args.out_dir << "/checkpoint.txt\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    CommonOpts common;
    std::string checkpoint_path;
    std::string ref_checkpoint_path;
    std::string prompts_path;
    std::string reward_spec;
    std::string out_dir;
    int samples = 0;
};

int run_eval(const EvalArgs& args) {
    Checkpoint ckpt = checkpoint::load(args.checkpoint_path);
    TrainConfig cfg = ckpt.config;
    if (const char* env = std::getenv("RLMTKIT_SEED")) {
        try {
            cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw InvalidInput("RLMTKIT_SEED is not an integer");
        }
    }
    if (!args.common.config_path.empty())
        cfg = config::load_file(args.common.config_path, cfg);
    if (args.common.seed >= 0) cfg.seed = static_cast<uint64_t>(args.common.seed);
    if (args.common.threads > 0) cfg.threads = args.common.threads;
    if (args.samples > 0) cfg.eval_samples = args.samples;
    if (maybe_print_config(cfg, args.common)) return 0;

    std::vector<Task> prompts = datasets::load_tasks(args.prompts_path);
    check_vocab_covers(ckpt.vocab, prompts, cfg.template_kind);

    PolicyParams ref_params = ckpt.params;
    if (!args.ref_checkpoint_path.empty()) {
        Checkpoint ref_ckpt = checkpoint::load(args.ref_checkpoint_path);
        if (!(ref_ckpt.vocab == ckpt.vocab))
            throw DataError("eval: reference checkpoint has a different vocab");
        ref_params = std::move(ref_ckpt.params);
    }

    // One summary line per reward source (comma-separated specs).
    std::string specs = args.reward_spec.empty() ? cfg.reward_spec : args.reward_spec;
    std::string summary_text;
    std::stringstream spec_stream(specs);
    std::string spec;
    while (std::getline(spec_stream, spec, ',')) {
        if (spec.empty()) continue;
        TrainConfig spec_cfg = cfg;
        spec_cfg.reward_spec = spec;
        RewardSource reward = trainer::make_reward_source(spec_cfg);
        EvalSummary summary =
            trainer::evaluate(ckpt.params, ref_params, ckpt.vocab, prompts, reward,
                              spec_cfg, spec_cfg.eval_samples, spec_cfg.seed);
        std::string line = summary_line(spec, summary);
        summary_text += line + "\n";
        std::cout << line << "\n";
    }
    if (summary_text.empty()) throw InvalidInput("eval: no reward sources given");

    if (!args.out_dir.empty()) {
        ensure_out_dir(args.out_dir);
        write_text(args.out_dir + "/eval_summary.txt", summary_text);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// plot-metrics

/// Eight-level ASCII sparkline over a series bucketed to at most `width`.
std::string sparkline(const std::vector<double>& series, int width) {
    static const char levels[] = " .:-=+*#";
    if (series.empty()) return "";
    double lo = series[0], hi = series[0];
    for (double v : series) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    const size_t buckets = std::min<size_t>(series.size(), static_cast<size_t>(width));
    std::string out;
    for (size_t b = 0; b < buckets; ++b) {
        size_t begin = b * series.size() / buckets;
        size_t end = std::max(begin + 1, (b + 1) * series.size() / buckets);
        double mean = 0.0;
        for (size_t i = begin; i < end; ++i) mean += series[i];
        mean /= static_cast<double>(end - begin);
        int level = span == 0.0
                        ? 0
                        : static_cast<int>((mean - lo) / span * 7.0 + 0.5);
        out += levels[std::clamp(level, 0, 7)];
    }
    return out;
}

struct PlotArgs {
    std::string metrics_path;
    std::string out_path;
    int width = 60;
};

int run_plot(const PlotArgs& args) {
    std::vector<MetricsRow> rows = metrics::load_csv(args.metrics_path);
    if (rows.empty())
        throw DataError("plot-metrics: no data rows in " + args.metrics_path);

    std::vector<double> reward, thoughts, responses;
    for (const auto& r : rows) {
        reward.push_back(r.mean_reward);
        thoughts.push_back(r.mean_thought_tokens);
        responses.push_back(r.mean_response_tokens);
    }

    auto curve = [&](const char* name, const std::vector<double>& s) {
        double lo = *std::min_element(s.begin(), s.end());
        double hi = *std::max_element(s.begin(), s.end());
        std::ostringstream out;
        out << name << " [" << lo << ", " << hi << "] over " << s.size() << " steps\n"
            << "  |" << sparkline(s, args.width) << "|\n";
        return out.str();
    };

    std::string text = curve("mean_reward", reward) +
                       curve("mean_thought_tokens", thoughts) +
                       curve("mean_response_tokens", responses);
    write_text(args.out_path, text);
    std::cout << text;
    return 0;
}

// ---------------------------------------------------------------------------
// analyze-traits

struct TraitArgs {
    std::string corpus_a;
    std::string corpus_b;
    std::string judge = "stub";
    std::string out_path;
    int batch_size = 20;
    int batches = 10;
    int64_t seed = -1;
};

int run_traits(const TraitArgs& args) {
    if (args.judge != "stub")
        throw InvalidInput("analyze-traits: only the 'stub' judge ships with the CLI");
    uint64_t seed = 0;
    if (const char* env = std::getenv("RLMTKIT_SEED")) {
        try {
            seed = std::stoull(env);
        } catch (const std::exception&) {
            throw InvalidInput("RLMTKIT_SEED is not an integer");
        }
    }
    if (args.seed >= 0) seed = static_cast<uint64_t>(args.seed);

    auto corpus_a = datasets::load_thought_corpus(args.corpus_a);
    auto corpus_b = datasets::load_thought_corpus(args.corpus_b);

    std::unique_ptr<Judge> judge = make_stub_judge();
    auto examples = traitlab::extract_examples(*judge, corpus_a, corpus_b);
    auto traits = traitlab::summarize_differences(*judge, examples, args.batches,
                                                  args.batch_size, seed);
    if (traits.empty()) {
        // No consistent differences; fall back to every extracted trait so
        // the head-to-head table is still informative.
        std::set<std::string> all;
        for (const auto& ex : examples) {
            all.insert(ex.traits_a.begin(), ex.traits_a.end());
            all.insert(ex.traits_b.begin(), ex.traits_b.end());
        }
        traits.assign(all.begin(), all.end());
    }
    WinRateTable table = traitlab::headtohead(*judge, traits, examples);

    std::string csv = traitlab::table_to_csv(table);
    write_text(args.out_path, csv);
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rlmtkit: desk-scale RL training over thinking-trace policies"};
    app.require_subcommand(1);

    SftArgs sft;
    CLI::App* sft_cmd = app.add_subcommand("sft", "supervised warm-start on demos");
    add_common(sft_cmd, sft.common);
    sft_cmd->add_option("--demos", sft.demos_path, "TSV: prompt, thought, response")
        ->required();
    sft_cmd->add_option("--out", sft.out_dir, "output directory")->required();
    sft_cmd->add_flag("--thinking", sft.thinking, "train the thinking output format");
    sft_cmd->add_option("--epochs", sft.epochs, "passes over the demos (default 2)");

    TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "RL training (dpo/ppo/grpo)");
    add_common(train_cmd, train.common);
    train_cmd->add_option("--algo", train.algo, "dpo, ppo or grpo")->required();
    train_cmd->add_option("--mode", train.mode, "warmstart (default) or zero");
    train_cmd->add_flag("--thinking", train.thinking, "use the thinking template");
    train_cmd->add_flag("--no-thinking", train.no_thinking, "use the plain template");
    train_cmd->add_option("--checkpoint-in", train.checkpoint_in,
                          "warm-start checkpoint");
    train_cmd->add_option("--prompts", train.prompts_path,
                          "TSV: prompt, optional gold")
        ->required();
    train_cmd->add_option("--eval-prompts", train.eval_prompts_path,
                          "held-out prompts for the final evaluation");
    train_cmd->add_option("--out", train.out_dir, "output directory")->required();

    EvalArgs eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval_cmd, eval.common);
    eval_cmd->add_option("--checkpoint", eval.checkpoint_path, "checkpoint to evaluate")
        ->required();
    eval_cmd->add_option("--ref-checkpoint", eval.ref_checkpoint_path,
                         "reference checkpoint (defaults to the checkpoint itself)");
    eval_cmd->add_option("--prompts", eval.prompts_path, "TSV: prompt, optional gold")
        ->required();
    eval_cmd->add_option("--reward", eval.reward_spec,
                         "comma-separated reward specs (verifier, model:<file>)");
    eval_cmd->add_option("--samples", eval.samples, "samples per prompt");
    eval_cmd->add_option("--out", eval.out_dir, "directory for eval_summary.txt");

    PlotArgs plot;
    CLI::App* plot_cmd = app.add_subcommand("plot-metrics",
                                            "render metric curves as text sparklines");
    plot_cmd->add_option("--metrics", plot.metrics_path, "metrics csv")->required();
    plot_cmd->add_option("--out", plot.out_path, "output text file")->required();
    plot_cmd->add_option("--width", plot.width, "sparkline width (default 60)");

    TraitArgs traits;
    CLI::App* trait_cmd =
        app.add_subcommand("analyze-traits", "trait win rates over two thought corpora");
    trait_cmd->add_option("--corpus-a", traits.corpus_a, "TSV: prompt, thought")
        ->required();
    trait_cmd->add_option("--corpus-b", traits.corpus_b, "TSV: prompt, thought")
        ->required();
    trait_cmd->add_option("--judge", traits.judge, "judge spec (stub)");
    trait_cmd->add_option("--batch-size", traits.batch_size,
                          "prompts per comparison batch (default 20)");
    trait_cmd->add_option("--batches", traits.batches,
                          "random comparison batches (default 10)");
    trait_cmd->add_option("--seed", traits.seed, "batch-sampling seed");
    trait_cmd->add_option("--out", traits.out_path, "output csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (sft_cmd->parsed()) return run_sft(sft);
        if (train_cmd->parsed()) return run_train(train);
        if (eval_cmd->parsed()) return run_eval(eval);
        if (plot_cmd->parsed()) return run_plot(plot);
        if (trait_cmd->parsed()) return run_traits(traits);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
