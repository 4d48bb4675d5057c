#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// Deterministic random helpers. std::mt19937_64 is fully specified by the
// standard, but the distributions are not, so every draw that must reproduce
// bit-for-bit across platforms is derived from raw engine output here.
namespace mcgc::rng {

using Engine = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

/// Uniform index in [0, n). Rejection sampling keeps the draw unbiased.
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = eng();
    } while (x >= limit);
    return x % n;
}

/// Standard normal via Box-Muller. One value per call; the second root is
/// discarded so engine state advances by exactly two draws.
inline double normal(Engine& eng) {
    double u1 = uniform01(eng);
    double u2 = uniform01(eng);
    while (u1 <= 0.0) u1 = uniform01(eng); // log(0) guard
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline double log_normal(Engine& eng, double mu, double sigma) {
    return std::exp(mu + sigma * normal(eng));
}

/// Fisher-Yates shuffle with the deterministic index draw above.
template <typename T>
void shuffle(std::vector<T>& items, Engine& eng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_index(eng, i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace mcgc::rng
