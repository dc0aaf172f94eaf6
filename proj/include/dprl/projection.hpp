#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dprl {

/// One per-(h,s,a) consistency problem: noisy per-destination counts, the
/// independently-noised marginal, and the allowed total-sum slack.
struct ProjectionProblem {
    std::vector<double> noisy_dest;  // length S
    double noisy_total = 0.0;
    double slack = 0.0;  // nonnegative
};

struct ProjectionSolution {
    std::vector<double> x;  // nonnegative, length S
    double t_star = 0.0;    // achieved max deviation, minimal
};

namespace detail {

/// Target interval for the sum constraint, intersected with [0, inf).
/// Since any feasible x has a nonnegative sum, the clamp never alters a
/// feasible problem; it is what keeps the projection total when the noisy
/// marginal itself dips below -slack.
inline void clamped_target(const ProjectionProblem& p, double& lo, double& hi) {
    lo = std::max(0.0, p.noisy_total - p.slack);
    hi = std::max(0.0, p.noisy_total + p.slack);
}

/// feasible(t): every box [max(0, d - t), d + t] is nonempty and the
/// reachable sum range intersects the target interval.
inline bool projection_feasible(const ProjectionProblem& p, double t) {
    double target_lo, target_hi;
    clamped_target(p, target_lo, target_hi);
    double sum_lo = 0.0, sum_hi = 0.0;
    for (double d : p.noisy_dest) {
        if (d + t < 0.0) return false;
        sum_lo += std::max(0.0, d - t);
        sum_hi += d + t;
    }
    return sum_lo <= target_hi && sum_hi >= target_lo;
}

/// Deterministic minimizer at a feasible t: clamp each coordinate to its
/// box, then push the sum into the target interval, adjusting coordinates
/// from the lowest state index first.
inline std::vector<double> assign_within_boxes(const ProjectionProblem& p, double t) {
    const std::size_t n = p.noisy_dest.size();
    double target_lo, target_hi;
    clamped_target(p, target_lo, target_hi);
    std::vector<double> x(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::max(0.0, p.noisy_dest[i]);
        sum += x[i];
    }
    if (sum < target_lo) {
        double deficit = target_lo - sum;
        for (std::size_t i = 0; i < n && deficit > 0.0; ++i) {
            const double headroom = p.noisy_dest[i] + t - x[i];
            const double add = std::min(deficit, std::max(0.0, headroom));
            x[i] += add;
            deficit -= add;
        }
    } else if (sum > target_hi) {
        double excess = sum - target_hi;
        for (std::size_t i = 0; i < n && excess > 0.0; ++i) {
            const double floor_i = std::max(0.0, p.noisy_dest[i] - t);
            const double take = std::min(excess, x[i] - floor_i);
            x[i] -= take;
            excess -= take;
        }
    }
    return x;
}

}  // namespace detail

inline constexpr double kProjectionTol = 1e-9;

/// Minimizes max_i |x_i - noisy_dest_i| over x >= 0 with
/// |sum(x) - noisy_total| <= slack, the LP reformulated as a bisection on
/// the deviation bound t (feasibility is monotone in t). Deterministic;
/// t resolved to 1e-9.
inline ProjectionSolution project(const ProjectionProblem& problem) {
    if (problem.slack < 0.0) throw std::invalid_argument("project: slack must be nonnegative");
    if (problem.noisy_dest.empty()) throw std::invalid_argument("project: empty problem");

    double hi = 0.0;
    if (!detail::projection_feasible(problem, 0.0)) {
        hi = 1.0;
        while (!detail::projection_feasible(problem, hi)) {
            hi *= 2.0;
            if (hi > 1e18) throw std::logic_error("project: no feasible deviation found");
        }
        double lo = hi == 1.0 ? 0.0 : hi / 2.0;  // last infeasible value
        while (hi - lo > kProjectionTol) {
            const double mid = 0.5 * (lo + hi);
            (detail::projection_feasible(problem, mid) ? hi : lo) = mid;
        }
    }

    ProjectionSolution sol;
    sol.x = detail::assign_within_boxes(problem, hi);
    double achieved = 0.0;
    for (std::size_t i = 0; i < sol.x.size(); ++i)
        achieved = std::max(achieved, std::abs(sol.x[i] - problem.noisy_dest[i]));
    sol.t_star = achieved;
    return sol;
}

/// Reference solver for tests: scans t on a fixed grid from zero and
/// returns the first feasible value. Independent of the bisection path;
/// only meant for small S.
inline ProjectionSolution project_oracle(const ProjectionProblem& problem, double grid) {
    if (!(grid > 0.0)) throw std::invalid_argument("project_oracle: grid must be positive");
    double target_lo, target_hi;
    detail::clamped_target(problem, target_lo, target_hi);
    for (std::int64_t step = 0;; ++step) {
        const double t = grid * static_cast<double>(step);
        double reach_lo = 0.0, reach_hi = 0.0;
        bool boxes_ok = true;
        for (double d : problem.noisy_dest) {
            const double box_lo = std::max(0.0, d - t);
            const double box_hi = d + t;
            if (box_hi < box_lo) {
                boxes_ok = false;
                break;
            }
            reach_lo += box_lo;
            reach_hi += box_hi;
        }
        if (boxes_ok && reach_lo <= target_hi && reach_hi >= target_lo) {
            ProjectionSolution sol;
            sol.x = detail::assign_within_boxes(problem, t);
            sol.t_star = t;
            return sol;
        }
        if (t > 1e12) throw std::logic_error("project_oracle: no feasible deviation found");
    }
}

/// The upward shifts applied after the projection so private counts never
/// underestimate: each destination gains E/(2S), the marginal gains E/2.
/// The returned total is the exact sum of the returned destinations.
inline std::pair<std::vector<double>, double> finalize_counts(const ProjectionSolution& sol,
                                                              int num_states, double e_bound) {
    if (num_states < 1 || static_cast<std::size_t>(num_states) != sol.x.size())
        throw std::invalid_argument("finalize_counts: state count mismatch");
    if (e_bound < 0.0) throw std::invalid_argument("finalize_counts: E must be nonnegative");
    std::vector<double> dest(sol.x.size());
    const double shift = e_bound / (2.0 * num_states);
    double total = 0.0;
    for (std::size_t i = 0; i < dest.size(); ++i) {
        dest[i] = sol.x[i] + shift;
        total += dest[i];
    }
    return {std::move(dest), total};
}

}  // namespace dprl
