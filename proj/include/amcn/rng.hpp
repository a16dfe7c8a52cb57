#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// Deterministic random helpers. std::mt19937_64 is fully specified by the
// standard, but the standard distributions are not, so every mapping from
// raw engine output to values is spelled out here. This keeps seeded runs
// bitwise reproducible across compilers and standard libraries.

namespace amcn {

using Rng = std::mt19937_64;

// Mixes a seed with a stream index so that related generators (per scene,
// per channel) are decorrelated. SplitMix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Standard normal via Box-Muller; one value per call, fixed draw order.
inline double normal01(Rng& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Uniform integer in [0, n), n >= 1. Modulo bias is below 2^-32 for the
// sizes used here.
inline std::uint64_t below(Rng& rng, std::uint64_t n) {
    return rng() % n;
}

// In-place Fisher-Yates shuffle with the explicit index draw above.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace amcn
