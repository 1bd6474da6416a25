// rng.hpp
// Seeded random sources with an explicit stream-derivation rule: repetition i
// of a run draws from the stream derived by hashing (seed, i), so results are
// independent of how repetitions are scheduled across workers. The generator
// is splitmix64 in counter mode: streams are short (a handful of draws each),
// re-seeding is free, and the draw sequence is fixed by this file alone, so
// identical seeds give identical mark streams on any platform.
#pragma once

#include <cmath>
#include <cstdint>

#include "iqm/spacetime.hpp"

namespace iqm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes (seed, index) into one 64-bit stream seed.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= index + 0x632be59bd9b4e019ULL;
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : state_(seed) {}

    static RandomSource for_index(std::uint64_t seed, std::uint64_t index) {
        return RandomSource(derive_stream_seed(seed, index));
    }

    std::uint64_t bits() { return splitmix64(state_); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = bits();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; stateless, two draws per sample.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Isotropic direction on the unit sphere.
    Vec3 unit_vector() {
        Vec3 v{normal(), normal(), normal()};
        double n = v.norm();
        while (n < 1e-12) {  // astronomically rare
            v = Vec3{normal(), normal(), normal()};
            n = v.norm();
        }
        return {v.x / n, v.y / n, v.z / n};
    }

private:
    std::uint64_t state_;
};

}  // namespace iqm
