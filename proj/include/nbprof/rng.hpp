#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "nbprof/error.hpp"

namespace nbprof {

/// All randomness in the library flows through a seeded mt19937_64.
/// The std:: distribution adaptors are implementation-defined, so the
/// draws below are hand-rolled to keep results stable across toolchains.
using Rng = std::mt19937_64;

/// Mixes a label and counter into a seed so that independent consumers
/// (runs, configs, fits) get decorrelated streams from one global seed.
/// FNV-1a over the label, then splitmix64 finalization.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t counter = 0) {
    std::uint64_t h = 14695981039346656037ULL ^ base;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    h ^= counter + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n == 0) throw usage_error("uniform_index: empty range");
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

/// Uniform integer in [lo, hi] inclusive.
inline long long uniform_int(Rng& rng, long long lo, long long hi) {
    if (hi < lo) throw usage_error("uniform_int: inverted range");
    return lo + static_cast<long long>(
                    uniform_index(rng, static_cast<std::size_t>(hi - lo) + 1));
}

/// Log-uniform integer in [lo, hi] inclusive, lo >= 1.
inline long long log_uniform_int(Rng& rng, long long lo, long long hi) {
    if (lo < 1 || hi < lo) throw usage_error("log_uniform_int: bad range");
    const double u = uniform_real(rng, std::log(static_cast<double>(lo)),
                                  std::log(static_cast<double>(hi) + 1.0));
    auto v = static_cast<long long>(std::floor(std::exp(u)));
    return std::clamp(v, lo, hi);
}

/// Standard normal via Box-Muller (deterministic, no cached spare).
inline double normal01(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 == 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

} // namespace nbprof
