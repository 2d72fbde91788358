#include "rlmtkit/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {

const char* algorithm_name(Algorithm algo) {
    switch (algo) {
        case Algorithm::Sft: return "sft";
        case Algorithm::Dpo: return "dpo";
        case Algorithm::Ppo: return "ppo";
        case Algorithm::Grpo: return "grpo";
    }
    return "grpo";
}

Algorithm algorithm_from_name(std::string_view name) {
    if (name == "sft") return Algorithm::Sft;
    if (name == "dpo") return Algorithm::Dpo;
    if (name == "ppo") return Algorithm::Ppo;
    if (name == "grpo") return Algorithm::Grpo;
    throw InvalidInput("unknown algorithm: " + std::string(name));
}

TrainConfig TrainConfig::defaults_for(Algorithm algo) {
    TrainConfig cfg;
    cfg.algorithm = algo;
    switch (algo) {
        case Algorithm::Sft:
            cfg.actor_lr = 4e-6;
            cfg.batch_size = 16;
            cfg.epochs = 2;
            break;
        case Algorithm::Dpo:
            cfg.actor_lr = 3e-7;
            cfg.batch_size = 128;
            cfg.epochs = 2;
            cfg.samples_per_prompt = 8;
            break;
        case Algorithm::Ppo:
        case Algorithm::Grpo:
            cfg.actor_lr = 1e-6;
            cfg.critic_lr = 1e-5;
            cfg.batch_size = 64;
            cfg.samples_per_prompt = 8;
            cfg.steps = 120;
            break;
    }
    return cfg;
}

GrpoConfig TrainConfig::grpo_config() const {
    GrpoConfig g;
    g.group_size = samples_per_prompt;
    g.clip_kl = clip_kl;
    return g;
}

PpoConfig TrainConfig::ppo_config() const {
    PpoConfig p = ppo;
    p.clip_kl = clip_kl;
    return p;
}

void TrainConfig::validate() const {
    if (embed_dim <= 0) throw InvalidInput("config: embed_dim must be positive");
    if (actor_lr <= 0) throw InvalidInput("config: actor_lr must be positive");
    if (critic_lr <= 0) throw InvalidInput("config: critic_lr must be positive");
    if (batch_size <= 0) throw InvalidInput("config: batch_size must be positive");
    if (samples_per_prompt < 2)
        throw InvalidInput("config: samples_per_prompt must be >= 2");
    if (steps <= 0) throw InvalidInput("config: steps must be positive");
    if (epochs <= 0) throw InvalidInput("config: epochs must be positive");
    if (max_prompt_tokens <= 0 || max_prompt_tokens > kMaxPromptTokensCeiling)
        throw InvalidInput("config: max_prompt_tokens outside (0, 1024]");
    if (max_completion_tokens <= 0 || max_completion_tokens > kMaxCompletionTokensCeiling)
        throw InvalidInput("config: max_completion_tokens outside (0, 4096]");
    if (temperature <= 0) throw InvalidInput("config: temperature must be positive");
    if (thinking && !is_thinking_kind(template_kind))
        throw InvalidInput("config: thinking=true requires a *-think template");
    if (!thinking && is_thinking_kind(template_kind))
        throw InvalidInput("config: thinking=false requires a *-plain template");
    if (dpo.beta <= 0) throw InvalidInput("config: dpo_beta must be positive");
    if (clip_kl.epsilon <= 0 || clip_kl.epsilon >= 1)
        throw InvalidInput("config: clip_epsilon must be in (0,1)");
    if (clip_kl.kl_coefficient < 0)
        throw InvalidInput("config: kl_coef must be nonnegative");
    if (ppo.gamma < 0 || ppo.gamma > 1 || ppo.gae_lambda < 0 || ppo.gae_lambda > 1)
        throw InvalidInput("config: gamma and gae_lambda must be in [0,1]");
    if (length_bonus < 0) throw InvalidInput("config: length_bonus must be nonnegative");
    if (threads <= 0) throw InvalidInput("config: threads must be positive");
    if (eval_samples <= 0) throw InvalidInput("config: eval_samples must be positive");
    if (rm_epochs <= 0 || rm_lr <= 0)
        throw InvalidInput("config: rm_epochs and rm_lr must be positive");
}

namespace config {

namespace {

/// Shortest decimal that round-trips the double exactly.
std::string fmt_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::stod(buf) == v) break;
    }
    return buf;
}

double parse_double(std::string_view key, std::string_view value) {
    try {
        size_t pos = 0;
        double d = std::stod(std::string(value), &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw InvalidInput("config: bad numeric value for " + std::string(key));
    }
}

long long parse_int(std::string_view key, std::string_view value) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw InvalidInput("config: bad integer value for " + std::string(key));
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw InvalidInput("config: bad boolean value for " + std::string(key));
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r";
    size_t b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string to_key_values(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "algorithm = " << algorithm_name(cfg.algorithm) << "\n";
    out << "thinking = " << (cfg.thinking ? "true" : "false") << "\n";
    out << "template = " << template_kind_name(cfg.template_kind) << "\n";
    out << "embed_dim = " << cfg.embed_dim << "\n";
    out << "actor_lr = " << fmt_double(cfg.actor_lr) << "\n";
    out << "critic_lr = " << fmt_double(cfg.critic_lr) << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "samples_per_prompt = " << cfg.samples_per_prompt << "\n";
    out << "steps = " << cfg.steps << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "max_prompt_tokens = " << cfg.max_prompt_tokens << "\n";
    out << "max_completion_tokens = " << cfg.max_completion_tokens << "\n";
    out << "temperature = " << fmt_double(cfg.temperature) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "reward = " << cfg.reward_spec << "\n";
    out << "rm_epochs = " << cfg.rm_epochs << "\n";
    out << "rm_lr = " << fmt_double(cfg.rm_lr) << "\n";
    out << "length_bonus = " << fmt_double(cfg.length_bonus) << "\n";
    out << "length_bonus_cap = " << cfg.length_bonus_cap << "\n";
    out << "dpo_beta = " << fmt_double(cfg.dpo.beta) << "\n";
    out << "clip_epsilon = " << fmt_double(cfg.clip_kl.epsilon) << "\n";
    out << "kl_coef = " << fmt_double(cfg.clip_kl.kl_coefficient) << "\n";
    out << "gamma = " << fmt_double(cfg.ppo.gamma) << "\n";
    out << "gae_lambda = " << fmt_double(cfg.ppo.gae_lambda) << "\n";
    out << "adam_beta1 = " << fmt_double(cfg.adam_beta1) << "\n";
    out << "adam_beta2 = " << fmt_double(cfg.adam_beta2) << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "eval_samples = " << cfg.eval_samples << "\n";
    return out.str();
}

void apply_key_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
    if (key == "algorithm") cfg.algorithm = algorithm_from_name(value);
    else if (key == "thinking") cfg.thinking = parse_bool(key, value);
    else if (key == "template") cfg.template_kind = template_kind_from_name(value);
    else if (key == "embed_dim") cfg.embed_dim = static_cast<int>(parse_int(key, value));
    else if (key == "actor_lr") cfg.actor_lr = parse_double(key, value);
    else if (key == "critic_lr") cfg.critic_lr = parse_double(key, value);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "samples_per_prompt")
        cfg.samples_per_prompt = static_cast<int>(parse_int(key, value));
    else if (key == "steps") cfg.steps = static_cast<int>(parse_int(key, value));
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "max_prompt_tokens")
        cfg.max_prompt_tokens = static_cast<int>(parse_int(key, value));
    else if (key == "max_completion_tokens")
        cfg.max_completion_tokens = static_cast<int>(parse_int(key, value));
    else if (key == "temperature") cfg.temperature = parse_double(key, value);
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_int(key, value));
    else if (key == "reward") cfg.reward_spec = std::string(value);
    else if (key == "rm_epochs") cfg.rm_epochs = static_cast<int>(parse_int(key, value));
    else if (key == "rm_lr") cfg.rm_lr = parse_double(key, value);
    else if (key == "length_bonus") cfg.length_bonus = parse_double(key, value);
    else if (key == "length_bonus_cap")
        cfg.length_bonus_cap = static_cast<int>(parse_int(key, value));
    else if (key == "dpo_beta") cfg.dpo.beta = parse_double(key, value);
    else if (key == "clip_epsilon") cfg.clip_kl.epsilon = parse_double(key, value);
    else if (key == "kl_coef") cfg.clip_kl.kl_coefficient = parse_double(key, value);
    else if (key == "gamma") cfg.ppo.gamma = parse_double(key, value);
    else if (key == "gae_lambda") cfg.ppo.gae_lambda = parse_double(key, value);
    else if (key == "adam_beta1") cfg.adam_beta1 = parse_double(key, value);
    else if (key == "adam_beta2") cfg.adam_beta2 = parse_double(key, value);
    else if (key == "threads") cfg.threads = static_cast<int>(parse_int(key, value));
    else if (key == "eval_samples")
        cfg.eval_samples = static_cast<int>(parse_int(key, value));
    else
        throw InvalidInput("config: unknown key '" + std::string(key) + "'");
}

TrainConfig parse_key_values(const std::string& text, TrainConfig base) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw InvalidInput("config line " + std::to_string(line_no) +
                               ": expected 'key = value'");
        std::string_view key = trim(sv.substr(0, eq));
        std::string_view value = trim(sv.substr(eq + 1));
        if (key.empty())
            throw InvalidInput("config line " + std::to_string(line_no) + ": empty key");
        try {
            apply_key_value(base, key, value);
        } catch (const InvalidInput& e) {
            throw InvalidInput("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

TrainConfig load_file(const std::string& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_key_values(buf.str(), std::move(base));
}

}  // namespace config
}  // namespace rlmtkit
