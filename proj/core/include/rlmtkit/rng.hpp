#pragma once

#include <cstdint>
#include <random>

namespace rlmtkit {

/// splitmix64 step; used to derive independent per-rollout seeds from
/// (run seed, step, prompt index, sample index) counters so that sampling
/// stays a pure function of its seed regardless of thread schedule.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = splitmix64(seed ^ 0x6d656e74616c6c79ULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ (b + 0x100000001ULL));
    s = splitmix64(s ^ (c + 0x200000002ULL));
    return s;
}

/// Uniform double in [0,1) with 53 random bits. Hand-rolled instead of
/// std::uniform_real_distribution so the stream is identical across
/// standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

}  // namespace rlmtkit
