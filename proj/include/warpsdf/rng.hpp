#pragma once

// Counter-based RNG: every stream is derived by hashing a key tuple
// (seed, purpose tag, pixel, sample index, iteration, ...), so parallel
// rendering is deterministic and finite-difference runs share random
// numbers by construction.

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace warpsdf {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
} // namespace detail

struct Rng {
    std::uint64_t state = 0;

    static Rng keyed(std::initializer_list<std::uint64_t> keys) {
        std::uint64_t s = 0x853c49e6748fea9bull;
        for (std::uint64_t k : keys) s = detail::splitmix64(s ^ k);
        return Rng{s};
    }

    std::uint64_t next_u64() {
        state = detail::splitmix64(state);
        return state;
    }

    // uniform in [0, 1)
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [a, b)
    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    std::uint32_t next_below(std::uint32_t n) {
        return std::uint32_t(next_u64() % n);
    }

    // standard normal via Box-Muller
    double normal() {
        double u1 = next_double(), u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
    }
};

// Stable small tags for stream separation.
enum RngStream : std::uint64_t {
    kStreamPixel = 1,
    kStreamEdge = 2,
    kStreamBatch = 3,
    kStreamEikonal = 4,
    kStreamInit = 5,
    kStreamProbe = 6,
    kStreamGradient = 7,
};

} // namespace warpsdf
