// Shells out to the built CLI binary (path injected by CMake) and checks
// the documented exit codes, artifacts and idempotence.

#include "doctest.h"
#include "rlmtkit/checkpoint.hpp"
#include "rlmtkit/datasets.hpp"
#include "rlmtkit/metrics.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <sstream>

#ifndef RLMTKIT_CLI_PATH
#error "RLMTKIT_CLI_PATH must be defined by the build"
#endif

namespace fs = std::filesystem;
using namespace rlmtkit;

namespace {

struct Sandbox {
    fs::path root;
    Sandbox() {
        static int counter = 0;
        root = fs::temp_directory_path() /
               ("rlmtkit_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(root);
    }
    ~Sandbox() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
    std::string path(const std::string& name) const { return (root / name).string(); }
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(RLMTKIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_demo_file(const std::string& path) {
    std::ofstream out(path);
    out << "12\t\t21\n34\t\t43\n56\t\t65\n78\t\t87\n";
}

void write_task_file(const std::string& path) {
    std::ofstream out(path);
    out << "12\t21\n34\t43\n56\t65\n78\t87\n";
}

}  // namespace

TEST_CASE("cli: missing dataset exits 3, bad flags exit 2") {
    Sandbox box;
    CHECK(run_cli("sft --demos " + box.path("nope.tsv") + " --out " + box.path("o")) == 3);
    CHECK(run_cli("train --algo banana --prompts x --out y") == 2);
    CHECK(run_cli("train --algo grpo --mode nope --prompts x --out y") == 2);
    CHECK(run_cli("nonsense") == 2);
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("train --algo grpo --prompts x --out y") == 2);  // warmstart, no ckpt
    CHECK(run_cli("train --algo grpo --mode zero --thinking --no-thinking "
                  "--prompts x --out y") == 2);
}

TEST_CASE("cli: sft writes a versioned checkpoint and metrics") {
    Sandbox box;
    write_demo_file(box.path("demos.tsv"));
    std::string cfg_path = box.path("cfg.txt");
    {
        std::ofstream cfg(cfg_path);
        cfg << "actor_lr = 0.2\nembed_dim = 6\nbatch_size = 4\n";
    }
    int rc = run_cli("sft --demos " + box.path("demos.tsv") + " --out " + box.path("out") +
                     " --config " + cfg_path + " --seed 5");
    REQUIRE(rc == 0);

    std::string ckpt_text = read_file(box.path("out/checkpoint.txt"));
    CHECK(ckpt_text.rfind("RLMTKIT-CKPT v1\n", 0) == 0);
    auto rows = metrics::load_csv(box.path("out/metrics.csv"));
    CHECK(rows.size() == 2);  // 4 demos / batch 4 = 1 step x 2 epochs

    // Epochs default is 2; --epochs overrides.
    int rc2 = run_cli("sft --demos " + box.path("demos.tsv") + " --out " +
                      box.path("out2") + " --config " + cfg_path + " --seed 5 --epochs 3");
    REQUIRE(rc2 == 0);
    CHECK(metrics::load_csv(box.path("out2/metrics.csv")).size() == 3);
}

TEST_CASE("cli: print-config shows resolved defaults") {
    Sandbox box;
    write_demo_file(box.path("demos.tsv"));
    std::string out_path = box.path("pc.txt");
    std::string cmd = std::string(RLMTKIT_CLI_PATH) + " sft --demos " +
                      box.path("demos.tsv") + " --out " + box.path("o") +
                      " --print-config > " + out_path + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    std::string text = read_file(out_path);
    CHECK(text.find("algorithm = sft") != std::string::npos);
    CHECK(text.find("actor_lr = 4") != std::string::npos);
    CHECK(text.find("e-06") != std::string::npos);
    CHECK(text.find("epochs = 2") != std::string::npos);
    CHECK(text.find("temperature = 0.7") != std::string::npos);
}

TEST_CASE("cli: train + eval round-trip on a tiny grpo run") {
    Sandbox box;
    write_demo_file(box.path("demos.tsv"));
    write_task_file(box.path("tasks.tsv"));
    std::string cfg_path = box.path("cfg.txt");
    {
        std::ofstream cfg(cfg_path);
        cfg << "actor_lr = 0.1\nembed_dim = 6\nbatch_size = 2\nsteps = 3\n"
            << "samples_per_prompt = 4\nmax_completion_tokens = 8\n";
    }

    REQUIRE(run_cli("sft --demos " + box.path("demos.tsv") + " --out " + box.path("sft") +
                    " --seed 5 --config " + cfg_path) == 0);
    REQUIRE(run_cli("train --algo grpo --mode warmstart --no-thinking --checkpoint-in " +
                    box.path("sft/checkpoint.txt") + " --prompts " + box.path("tasks.tsv") +
                    " --out " + box.path("run") + " --seed 6 --config " + cfg_path) == 0);

    auto rows = metrics::load_csv(box.path("run/metrics.csv"));
    CHECK(rows.size() == 3);
    CHECK(read_file(box.path("run/eval_summary.txt")).find("win_rate_vs_ref") !=
          std::string::npos);

    // Re-running into a fresh directory is bit-identical.
    REQUIRE(run_cli("train --algo grpo --mode warmstart --no-thinking --checkpoint-in " +
                    box.path("sft/checkpoint.txt") + " --prompts " + box.path("tasks.tsv") +
                    " --out " + box.path("run2") + " --seed 6 --config " + cfg_path) == 0);
    CHECK(read_file(box.path("run/metrics.csv")) == read_file(box.path("run2/metrics.csv")));
    CHECK(read_file(box.path("run/checkpoint.txt")) ==
          read_file(box.path("run2/checkpoint.txt")));
    CHECK(read_file(box.path("run/eval_summary.txt")) ==
          read_file(box.path("run2/eval_summary.txt")));

    // eval on the produced checkpoint against itself.
    REQUIRE(run_cli("eval --checkpoint " + box.path("run/checkpoint.txt") + " --prompts " +
                    box.path("tasks.tsv") + " --reward verifier --samples 2 --seed 9 "
                    "--out " + box.path("eval")) == 0);
    std::string summary = read_file(box.path("eval/eval_summary.txt"));
    CHECK(summary.find("verifier:") != std::string::npos);

    // Dataset with characters outside the checkpoint vocab.
    {
        std::ofstream bad(box.path("bad.tsv"));
        bad << "zz\tzz\n";
    }
    CHECK(run_cli("eval --checkpoint " + box.path("run/checkpoint.txt") + " --prompts " +
                  box.path("bad.tsv") + " --out " + box.path("e2")) == 3);
}

TEST_CASE("cli: zero mode trains from scratch with the zero template") {
    Sandbox box;
    write_task_file(box.path("tasks.tsv"));
    std::string cfg_path = box.path("cfg.txt");
    {
        std::ofstream cfg(cfg_path);
        cfg << "actor_lr = 0.05\nembed_dim = 4\nbatch_size = 2\nsteps = 2\n"
            << "samples_per_prompt = 2\nmax_completion_tokens = 16\n"
            << "max_prompt_tokens = 600\n";
    }
    REQUIRE(run_cli("train --algo grpo --mode zero --no-thinking --prompts " +
                    box.path("tasks.tsv") + " --out " + box.path("zero") +
                    " --seed 3 --config " + cfg_path) == 0);
    Checkpoint ckpt = checkpoint::load(box.path("zero/checkpoint.txt"));
    CHECK(ckpt.config.template_kind == TemplateKind::ZeroPlain);
    CHECK(ckpt.vocab.contains('<'));  // template markup is tokenizable
}

TEST_CASE("cli: plot-metrics renders sparklines and rejects bad csv") {
    Sandbox box;
    {
        std::ofstream m(box.path("m.csv"));
        m << metrics::kCsvHeader << "\n";
        for (int i = 1; i <= 20; ++i)
            m << i << ',' << 0.05 * i << ',' << i << ',' << 2 * i << ",0.001,-0.1,1\n";
    }
    REQUIRE(run_cli("plot-metrics --metrics " + box.path("m.csv") + " --out " +
                    box.path("plot.txt")) == 0);
    std::string plot = read_file(box.path("plot.txt"));
    CHECK(plot.find("mean_reward") != std::string::npos);
    CHECK(plot.find("mean_thought_tokens") != std::string::npos);
    CHECK(plot.find("mean_response_tokens") != std::string::npos);

    {
        std::ofstream m(box.path("empty.csv"));
        m << metrics::kCsvHeader << "\n";
    }
    CHECK(run_cli("plot-metrics --metrics " + box.path("empty.csv") + " --out " +
                  box.path("p2.txt")) == 3);
    CHECK_FALSE(fs::exists(box.path("p2.txt")));  // no artifact on error

    {
        std::ofstream m(box.path("bad.csv"));
        m << metrics::kCsvHeader << "\n1,2\n";
    }
    CHECK(run_cli("plot-metrics --metrics " + box.path("bad.csv") + " --out " +
                  box.path("p3.txt")) == 3);
}

TEST_CASE("cli: analyze-traits writes the win-rate table") {
    Sandbox box;
    {
        std::ofstream a(box.path("a.tsv"));
        std::ofstream b(box.path("b.tsv"));
        for (int i = 0; i < 24; ++i) {
            a << "p" << i << "\tfirst a checklist of constraints then a plan\n";
            b << "p" << i << "\tshort plan\n";
        }
    }
    REQUIRE(run_cli("analyze-traits --corpus-a " + box.path("a.tsv") + " --corpus-b " +
                    box.path("b.tsv") + " --batch-size 12 --batches 4 --seed 2 --out " +
                    box.path("traits.csv")) == 0);
    std::string csv = read_file(box.path("traits.csv"));
    CHECK(csv.rfind("trait,wins_a,wins_b,ties,win_rate_a\n", 0) == 0);
    CHECK(csv.find("checklist-planning") != std::string::npos);

    // Identical corpora: every win rate is exactly one half.
    REQUIRE(run_cli("analyze-traits --corpus-a " + box.path("a.tsv") + " --corpus-b " +
                    box.path("a.tsv") + " --batch-size 12 --batches 4 --seed 2 --out " +
                    box.path("same.csv")) == 0);
    std::string same = read_file(box.path("same.csv"));
    std::istringstream lines(same);
    std::string line;
    std::getline(lines, line);  // header
    int rows = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        ++rows;
        CHECK(line.substr(line.rfind(',') + 1) == "0.5");
    }
    CHECK(rows >= 1);

    // Misaligned corpora list the missing prompts.
    {
        std::ofstream c(box.path("c.tsv"));
        c << "other\tplan\n";
    }
    CHECK(run_cli("analyze-traits --corpus-a " + box.path("a.tsv") + " --corpus-b " +
                  box.path("c.tsv") + " --out " + box.path("x.csv")) == 3);
}

TEST_CASE("cli: RLMTKIT_SEED env var acts as the seed fallback") {
    Sandbox box;
    write_demo_file(box.path("demos.tsv"));
    std::string base = std::string(RLMTKIT_CLI_PATH) + " sft --demos " +
                       box.path("demos.tsv") + " --out " + box.path("o") +
                       " --print-config";
    std::string with_env = "RLMTKIT_SEED=777 " + base + " > " + box.path("env.txt") +
                           " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(with_env.c_str())) == 0);
    CHECK(read_file(box.path("env.txt")).find("seed = 777") != std::string::npos);

    // Explicit --seed wins over the environment.
    std::string with_both = "RLMTKIT_SEED=777 " + base + " --seed 42 > " +
                            box.path("both.txt") + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(with_both.c_str())) == 0);
    CHECK(read_file(box.path("both.txt")).find("seed = 42") != std::string::npos);
}
