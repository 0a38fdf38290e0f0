#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pcaewc {

// Deterministic, platform-independent randomness. The standard library
// engines are portable but its distributions are not, so the uniform and
// normal transforms are fixed here.
//
// Stream splitting: every data block draws from an independent generator
// seeded by mix64(seed, tag), where the tag identifies the block role
// (see simgen.hpp). Generators are xoshiro256++ seeded via splitmix64.

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Combine a base seed with a stream tag into an independent sub-seed.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (tag + 1));
    return detail::splitmix64_next(s);
}

/// xoshiro256++ with fixed uniform/normal transforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = detail::splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; the second value of each pair is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t state_[4]{};
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace pcaewc
