#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rlmtkit/algorithms.hpp"
#include "rlmtkit/chatproto.hpp"

namespace rlmtkit {

enum class Algorithm { Sft, Dpo, Ppo, Grpo };

const char* algorithm_name(Algorithm algo);
Algorithm algorithm_from_name(std::string_view name);

/// Hard ceilings on sequence lengths; configs may not exceed them.
inline constexpr int kMaxPromptTokensCeiling = 1024;
inline constexpr int kMaxCompletionTokensCeiling = 4096;

/// Full training configuration. Defaults come from the published recipe
/// per algorithm (see defaults_for), with desk-scale sequence lengths.
struct TrainConfig {
    Algorithm algorithm = Algorithm::Grpo;
    bool thinking = false;
    TemplateKind template_kind = TemplateKind::WarmstartPlain;

    int embed_dim = 16;
    double actor_lr = 1e-6;
    double critic_lr = 1e-5;
    int batch_size = 64;
    int samples_per_prompt = 8;  // GRPO group size K
    int steps = 120;
    int epochs = 2;  // SFT / DPO passes over the data
    int max_prompt_tokens = 64;
    int max_completion_tokens = 256;
    double temperature = 0.7;
    uint64_t seed = 0;

    std::string reward_spec = "verifier";  // "verifier" or "model:<preference.tsv>"
    int rm_epochs = 2000;
    double rm_lr = 0.5;
    double length_bonus = 0.0;
    int length_bonus_cap = 50;

    DpoConfig dpo;
    ClipKlConfig clip_kl;
    PpoConfig ppo;

    // Recorded for fidelity with the published recipe; the trainer uses
    // plain constant-lr gradient descent, so these are never read.
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.95;

    int threads = 1;
    int eval_samples = 1;

    /// Per-algorithm defaults (learning rates, batch sizes, epochs).
    static TrainConfig defaults_for(Algorithm algo);

    GrpoConfig grpo_config() const;
    PpoConfig ppo_config() const;

    /// Throws InvalidInput when fields are inconsistent (non-positive
    /// sizes, thinking without a *-think template, lengths over ceiling).
    void validate() const;
};

namespace config {

/// Serializes every field as "key = value" lines in a fixed order.
std::string to_key_values(const TrainConfig& cfg);

/// Applies one "key = value" assignment; unknown keys throw InvalidInput.
void apply_key_value(TrainConfig& cfg, std::string_view key, std::string_view value);

/// Parses flat key-value text ('#' comments, blank lines allowed) on top of
/// the given base config. Malformed lines carry their line number.
TrainConfig parse_key_values(const std::string& text, TrainConfig base);

/// Reads a config file; DataError names the path on failure.
TrainConfig load_file(const std::string& path, TrainConfig base);

}  // namespace config
}  // namespace rlmtkit
