#pragma once

#include <cstdint>
#include <string>

#include "rlmtkit/config.hpp"
#include "rlmtkit/policy.hpp"
#include "rlmtkit/vocab.hpp"

namespace rlmtkit {

/// Everything needed to resume or evaluate a run. The on-disk form is
/// line-oriented text: a `RLMTKIT-CKPT v1` header, the vocab as byte
/// values, the config snapshot, step/RNG lines, then each parameter tensor
/// as `tensor <name> <rows> <cols>` followed by %.17g floats (which
/// round-trip doubles bit-exactly).
struct Checkpoint {
    int version = 1;
    Vocab vocab;
    PolicyParams params;
    TrainConfig config;
    int64_t step = 0;
    std::string rng_state;  // serialized std::mt19937_64
};

namespace checkpoint {

inline constexpr const char* kHeader = "RLMTKIT-CKPT v1";

void save(const std::string& path, const Checkpoint& ckpt);

/// Throws DataError on malformed/truncated files, version mismatch, or
/// dimension inconsistency.
Checkpoint load(const std::string& path);

}  // namespace checkpoint
}  // namespace rlmtkit
