// Independent reference computations used only by tests. Everything here
// deliberately avoids the library's own code paths for the quantity it
// checks.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dprl/planning.hpp"
#include "dprl/tabular_mdp.hpp"

namespace dprl::testing {

/// Exhaustive policy enumeration: evaluates every deterministic policy
/// exactly and returns, per state, the best achievable V_1(s). Only
/// feasible for tiny A^(H*S).
inline std::vector<double> brute_force_optimal_values(const TabularMdp& mdp) {
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const int cells = H * S;
    std::int64_t total = 1;
    for (int i = 0; i < cells; ++i) total *= A;
    std::vector<double> best(S, -1.0);
    for (std::int64_t code = 0; code < total; ++code) {
        Policy policy(H, S);
        std::int64_t rest = code;
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s) {
                policy.action(h, s) = static_cast<int>(rest % A);
                rest /= A;
            }
        // Exact evaluation by direct backward recursion, written out here
        // rather than calling policy_evaluation.
        std::vector<double> value(S, 0.0), next(S, 0.0);
        for (int h = H - 1; h >= 0; --h) {
            for (int s = 0; s < S; ++s) {
                const int a = policy.action(h, s);
                double ev = mdp.mean_reward(h, s, a);
                const auto row = mdp.transition_row(h, s, a);
                for (int t = 0; t < S; ++t) ev += row[t] * next[t];
                value[s] = ev;
            }
            next = value;
        }
        for (int s = 0; s < S; ++s) best[s] = std::max(best[s], value[s]);
    }
    return best;
}

/// Forward chain propagation: occupancy[h][s] = P(s_h = s) under a fixed
/// deterministic policy.
inline std::vector<std::vector<double>> exact_occupancy(const TabularMdp& mdp,
                                                        const Policy& policy) {
    const int S = mdp.num_states(), H = mdp.horizon();
    std::vector<std::vector<double>> occ(H, std::vector<double>(S, 0.0));
    const auto d1 = mdp.initial_dist();
    for (int s = 0; s < S; ++s) occ[0][s] = d1[s];
    for (int h = 0; h + 1 < H; ++h)
        for (int s = 0; s < S; ++s) {
            const auto row = mdp.transition_row(h, s, policy.action(h, s));
            for (int t = 0; t < S; ++t) occ[h + 1][t] += occ[h][s] * row[t];
        }
    return occ;
}

/// Stream-simulation oracle for the tree counter's sensitivity: walks the
/// run step by step and counts the materialized blocks containing k. The
/// block completed at step t spans (t - 2^level, t] with level the number
/// of trailing zero bits of t.
inline int touched_nodes_by_simulation(std::int64_t capacity, std::int64_t k) {
    int count = 0;
    for (std::int64_t t = 1; t <= capacity; ++t) {
        std::int64_t span = 1;
        while ((t & span) == 0) span <<= 1;
        if (t - span + 1 <= k && k <= t) ++count;
    }
    return count;
}

/// Completion times of the dyadic blocks tiling [1, k]: the partial sums
/// of k's binary decomposition, most significant bit first. The counter's
/// release at step k carries exactly the noise drawn at these steps.
inline std::vector<std::int64_t> dyadic_cover_completion_times(std::int64_t k) {
    std::vector<std::int64_t> times;
    std::int64_t prefix = 0;
    for (int bit = 62; bit >= 0; --bit)
        if (k & (std::int64_t{1} << bit)) {
            prefix += std::int64_t{1} << bit;
            times.push_back(prefix);
        }
    return times;
}

/// Line-7 bonus transcribed independently, term by term, for comparing
/// against the library implementation.
inline double bonus_reference(double n_sa, const std::vector<double>& p,
                              const std::vector<double>& v_next,
                              const std::vector<double>& n_next, double iota, double e, int H,
                              int S, int A, double scale) {
    double ev = 0.0, ev2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        ev += p[i] * v_next[i];
        ev2 += p[i] * v_next[i] * v_next[i];
    }
    const double var = std::max(0.0, ev2 - ev * ev);
    double sum = 2.0 * std::sqrt(var * iota / n_sa) + std::sqrt(2.0 * iota / n_sa) +
                 20.0 * H * S * e * iota / n_sa;
    if (!n_next.empty()) {
        double inner = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double n1 = n_next[i];
            const double a1 = 1000.0 * 1000.0 * H * H * H * S * A * iota * iota / n1;
            const double a2 = 1000.0 * 1000.0 * H * H * H * H * S * S * S * S * A * A * e * e *
                              iota * iota * iota * iota / (n1 * n1);
            const double a3 = 1000.0 * 1000.0 * H * H * H * H * H * H * S * S * S * S * A * A *
                              iota * iota * iota * iota / (n1 * n1);
            inner += p[i] * std::min(a1 + a2 + a3, static_cast<double>(H) * H);
        }
        sum += 4.0 * std::sqrt(iota) * std::sqrt(inner / n_sa);
    }
    return scale * sum;
}

}  // namespace dprl::testing
