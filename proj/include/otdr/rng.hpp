#pragma once

// Deterministic seeded randomness used across the workbench.
//
// Every random quantity in the pipeline (trace noise, dataset sampling,
// weight init, minibatch shuffles) is derived from 64-bit seeds through the
// functions below, so outputs are bit-identical across runs, platforms and
// thread counts. std::normal_distribution and std::shuffle are avoided on
// purpose: their outputs are implementation-defined.
//
// Bit-exact definitions:
//   splitmix64(x):   x += 0x9E3779B97F4A7C15
//                    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
//                    x = (x ^ (x >> 27)) * 0x94D049BB133111EB
//                    return x ^ (x >> 31)
//   mix_seed(s, i):  splitmix64(s + (i + 1) * 0x9E3779B97F4A7C15)
//   u64 -> (0,1]:    ((x >> 11) + 1) * 2^-53
//   normal pair:     Box-Muller on two consecutive stream values

#include <cmath>
#include <cstdint>
#include <vector>

namespace otdr {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Derives the seed of sub-stream i from a master seed. Used for per-item
// dataset seeds and per-epoch shuffle seeds; documented bit-exactly above.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t i) {
    return splitmix64(master + (i + 1) * 0x9E3779B97F4A7C15ULL);
}

// Sequential splitmix64 generator.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1]; never returns 0 so it is safe under log().
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;  // [0,1)
        return lo + u * (hi - lo);
    }

    // Uniform integer in [0, n); n > 0. Simple rejection-free scaling is
    // fine here: n is always tiny compared to 2^53.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(next_unit_half_open() * static_cast<double>(n));
    }

    // Standard normal via Box-Muller; consumes two stream values.
    double next_normal() {
        double u1 = next_unit();
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    double next_unit_half_open() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;  // [0,1)
    }

    std::uint64_t state_;
};

// Counter-based standard-normal stream: at(i) depends only on (seed, i), so
// samples can be evaluated in any order or in parallel with identical results.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : seed_(seed) {}

    double at(std::uint64_t i) const {
        std::uint64_t a = splitmix64(seed_ + (2 * i + 1) * 0x9E3779B97F4A7C15ULL);
        std::uint64_t b = splitmix64(seed_ + (2 * i + 2) * 0x9E3779B97F4A7C15ULL);
        double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
        double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

// Deterministic Fisher-Yates shuffle driven by SplitMix.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::uint64_t seed) {
    SplitMix rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace otdr
