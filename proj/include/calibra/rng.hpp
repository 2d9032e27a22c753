#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

namespace calibra::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream-derivation tags. Every random draw in the library comes from a
// stream derived as derive(seed, {tag, ...indices}), so adding draws to one
// consumer never reshuffles another.
enum Tag : std::uint64_t {
    kParamInit = 1,
    kPosteriorInit = 2,
    kDataSynth = 3,
    kSplit = 4,
    kShuffle = 5,
    kTrainNoise = 6,
    kEval = 7,
    kEnsemble = 8,
};

/// Deterministic random stream with self-contained uniform/normal sampling
/// (no std::*_distribution, whose output is implementation-defined).
class Stream {
public:
    explicit Stream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (two uniforms per draw).
    double normal() {
        const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::vector<double> normals(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = normal();
        return out;
    }

    /// Unbiased integer in [0, n) via rejection sampling.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t u;
        do {
            u = gen_();
        } while (u >= limit);
        return u % n;
    }

private:
    std::mt19937_64 gen_;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(seed ^ 0x8f1bbcdc2f1e4b5dULL);
    for (std::uint64_t t : path) h = splitmix64(h ^ splitmix64(t + 0x165667b19e3779f9ULL));
    return h;
}

inline Stream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Stream(derive_seed(seed, path));
}

template <class T>
void shuffle(std::vector<T>& v, Stream& s) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(s.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace calibra::rng
