// SPDX-License-Identifier: Apache-2.0
//
// Seeded randomness. Every stochastic component draws from an Rng seeded
// through derive_seed, so that a run is a pure function of its config seed.

#pragma once

#include <cstdint>
#include <random>

namespace pear {

// splitmix64; used to derive independent stream seeds from (seed, tags).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag1, std::uint64_t tag2) {
    return derive_seed(derive_seed(seed, tag1), tag2);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    bool bernoulli(double p) {
        return std::bernoulli_distribution(p)(engine_);
    }
    // Uniform integer in [lo, hi] inclusive.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace pear
