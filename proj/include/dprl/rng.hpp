#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace dprl {

/// Seeded random source used throughout the library.
///
/// Wraps std::mt19937_64 but generates variates from raw bits instead of
/// the std distribution objects, whose output is implementation-defined.
/// Same seed therefore means the same sequence on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1) — never returns an exact endpoint.
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Index drawn from an (unnormalized-tolerant) probability vector.
    int categorical(std::span<const double> probs) {
        const double u = uniform();
        double cume = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            cume += probs[i];
            if (u < cume) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

/// One draw from the centered Laplace distribution with the given scale
/// (density proportional to exp(-|x|/scale)), via inverse CDF.
inline double laplace_sample(double scale, Rng& rng) {
    if (!(scale > 0.0)) throw std::invalid_argument("laplace_sample: scale must be positive");
    const double u = rng.uniform_open() - 0.5;  // (-0.5, 0.5)
    return u < 0.0 ? scale * std::log1p(2.0 * u) : -scale * std::log1p(-2.0 * u);
}

/// SplitMix64 finalizer; used to derive independent run seeds from
/// (base seed, arm identity, run index) without positional coupling.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a hash of a string, for arm-identity based seed derivation.
inline std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace dprl
