#pragma once

#include <cstdint>
#include <initializer_list>
#include <cmath>
#include <random>

namespace nl2l {

using Rng = std::mt19937_64;

/// Stream tags used when deriving seeds. Each tag keeps one family of random
/// streams disjoint from the others.
enum class Stream : std::uint64_t {
    Task = 0x7461736bULL,
    Agent = 0x6167656eULL,
    Optimizer = 0x6f707469ULL,
    Selection = 0x73656c65ULL,
    Evaluation = 0x6576616cULL,
    Resample = 0x72657361ULL,
    Analysis = 0x616e616cULL,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a tuple of integers into a 64-bit seed.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : parts) {
        h = splitmix64(h ^ splitmix64(p));
    }
    return h;
}

inline std::uint64_t derive_seed(Stream tag, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(tag));
    for (auto p : parts) {
        h = splitmix64(h ^ splitmix64(p));
    }
    return h;
}

inline double uniform01(Rng& rng) {
    // 53 random mantissa bits; identical on every standard library.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
    // Box-Muller on our own uniforms so results do not depend on the
    // standard library's distribution implementation.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline int uniform_index(Rng& rng, int n) {
    return static_cast<int>(uniform01(rng) * n) % n;
}

} // namespace nl2l
