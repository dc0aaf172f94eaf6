#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dprl/rng.hpp"

namespace dprl {

/// Tree-aggregation counter releasing private prefix sums of a bounded
/// stream (values in [0, 1]).
///
/// After the t-th append the stream position t completes exactly one dyadic
/// block, the one of length 2^i covering (t - 2^i, t] where 2^i is the
/// largest power of two dividing t. That block's sum receives a single
/// Laplace(1/eps') draw, cached until a higher block supersedes it, so
/// every released prefix is the true sum plus the noise of the at most
/// floor(log2 t) + 1 blocks tiling [1, t]. Re-reading without appending
/// never re-randomizes.
///
/// Single writer; independent counters may run concurrently, each with its
/// own random source.
class BinaryMechanismCounter {
  public:
    BinaryMechanismCounter(std::int64_t capacity, double eps_prime, bool zero_noise = false)
        : capacity_(capacity), eps_prime_(eps_prime), zero_noise_(zero_noise) {
        if (capacity < 1)
            throw std::invalid_argument("BinaryMechanismCounter: capacity must be >= 1");
        if (!(eps_prime > 0.0))
            throw std::invalid_argument("BinaryMechanismCounter: eps_prime must be positive");
        int levels = 1;
        while ((std::int64_t{1} << levels) <= capacity) ++levels;
        block_sum_.assign(levels, 0.0);
        noisy_block_.assign(levels, 0.0);
    }

    void append(double value, Rng& rng) {
        if (steps_ >= capacity_)
            throw std::logic_error("BinaryMechanismCounter: capacity exceeded");
        if (!(value >= 0.0 && value <= 1.0))
            throw std::invalid_argument("BinaryMechanismCounter: value must lie in [0,1]");
        ++steps_;
        const int level = lowest_set_bit(steps_);
        double sum = value;
        for (int i = 0; i < level; ++i) {
            sum += block_sum_[i];
            block_sum_[i] = 0.0;
            noisy_block_[i] = 0.0;
        }
        block_sum_[level] = sum;
        noisy_block_[level] = zero_noise_ ? sum : sum + laplace_sample(1.0 / eps_prime_, rng);
        double released = 0.0;
        for (int i = 0; i < static_cast<int>(noisy_block_.size()); ++i)
            if (steps_ & (std::int64_t{1} << i)) released += noisy_block_[i];
        released_ = released;
    }

    void append_zeros(std::int64_t count, Rng& rng) {
        for (std::int64_t i = 0; i < count; ++i) append(0.0, rng);
    }

    /// Current private prefix sum; identical across repeated calls until
    /// the next append.
    double release() const {
        if (steps_ < 1)
            throw std::logic_error("BinaryMechanismCounter: release before any append");
        return released_;
    }

    std::int64_t steps() const { return steps_; }
    std::int64_t capacity() const { return capacity_; }
    bool zero_noise_mode() const { return zero_noise_; }

  private:
    static int lowest_set_bit(std::int64_t t) {
        int i = 0;
        while (((t >> i) & 1) == 0) ++i;
        return i;
    }

    std::int64_t capacity_;
    double eps_prime_;
    bool zero_noise_;
    std::int64_t steps_ = 0;
    double released_ = 0.0;
    std::vector<double> block_sum_;   // exact sum per live dyadic block, by level
    std::vector<double> noisy_block_;  // same blocks with their cached noise
};

/// Number of dyadic blocks a length-`capacity` run ever materializes that
/// contain stream position k. Flipping element k perturbs exactly these
/// blocks, which is the sensitivity count behind the per-counter budget
/// split. A level-i block [m*2^i + 1, (m+1)*2^i] is materialized iff m is
/// even (odd blocks fold straight into their parent) and it completes
/// within the run.
inline int bm_sensitivity_audit(std::int64_t capacity, std::int64_t k) {
    if (k < 1 || k > capacity)
        throw std::invalid_argument("bm_sensitivity_audit: position out of range");
    int touched = 0;
    for (int level = 0; (std::int64_t{1} << level) <= capacity; ++level) {
        const std::int64_t block = (k - 1) >> level;
        const std::int64_t block_end = (block + 1) << level;
        if (block % 2 == 0 && block_end <= capacity) ++touched;
    }
    return touched;
}

/// Documented high-probability error bound for one counter: with
/// probability at least 1 - delta,
///   max_{k <= capacity} |release(k) - true(k)|
///     <= (kBmErrorConstant / eps') * log2(capacity)^1.5 * ln(1/delta).
/// Stated for capacity >= 4 and delta <= 0.1; derived from the
/// sub-exponential tail of the <= log2(capacity)+1 Laplace terms per
/// release plus a union bound over releases.
inline constexpr double kBmErrorConstant = 2.0;

inline double bm_error_bound(std::int64_t capacity, double eps_prime, double delta) {
    if (!(eps_prime > 0.0) || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("bm_error_bound: bad arguments");
    const double log_cap = std::max(1.0, std::log2(static_cast<double>(capacity)));
    return kBmErrorConstant / eps_prime * std::pow(log_cap, 1.5) * std::log(1.0 / delta);
}

}  // namespace dprl
