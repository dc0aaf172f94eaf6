#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dprl/tabular_mdp.hpp"

namespace dprl {

/// RiverSwim chain parameters. Action 0 ("left") moves one state left
/// deterministically (clamped at state 0). Action 1 ("right") advances,
/// stays or slips back with the probabilities below. The classic small
/// reward sits at (state 0, left), the big one at (state S-1, right).
/// The defaults follow the conventional Strehl & Littman instance.
struct RiverSwimParams {
    double right_advance = 0.3;      // middle states, action right
    double right_stay = 0.6;
    double right_back = 0.1;
    double left_end_advance = 0.3;   // state 0, action right
    double left_end_stay = 0.7;
    double right_end_stay = 0.9;     // state S-1, action right
    double right_end_back = 0.1;
    double reward_left = 0.05;
    double reward_right = 1.0;
    RewardKind reward_kind = RewardKind::bernoulli;
};

inline constexpr int kActionLeft = 0;
inline constexpr int kActionRight = 1;

/// Builds the RiverSwim MDP: stationary dynamics replicated across all H
/// steps, initial state fixed at the left end.
inline TabularMdp build_riverswim(int num_states, int horizon,
                                  const RiverSwimParams& params = {}) {
    if (num_states < 2) throw std::invalid_argument("build_riverswim: need at least 2 states");
    auto check_simplex = [](double a, double b, double c, const char* where) {
        if (a < 0.0 || b < 0.0 || c < 0.0 || std::abs(a + b + c - 1.0) > kRowSumTol)
            throw std::invalid_argument(std::string("build_riverswim: probabilities for ") +
                                        where + " must be nonnegative and sum to 1");
    };
    check_simplex(params.right_advance, params.right_stay, params.right_back, "middle states");
    check_simplex(params.left_end_advance, params.left_end_stay, 0.0, "left end");
    check_simplex(params.right_end_stay, params.right_end_back, 0.0, "right end");
    if (params.reward_left < 0.0 || params.reward_left > 1.0 || params.reward_right < 0.0 ||
        params.reward_right > 1.0)
        throw std::invalid_argument("build_riverswim: rewards must lie in [0,1]");

    const int S = num_states, A = 2, H = horizon;
    std::vector<double> stationary_p(static_cast<std::size_t>(S) * A * S, 0.0);
    std::vector<double> stationary_r(static_cast<std::size_t>(S) * A, 0.0);
    auto p = [&](int s, int a, int t) -> double& {
        return stationary_p[(static_cast<std::size_t>(s) * A + a) * S + t];
    };
    for (int s = 0; s < S; ++s) {
        p(s, kActionLeft, s > 0 ? s - 1 : 0) = 1.0;
        if (s == 0) {
            p(s, kActionRight, 1) = params.left_end_advance;
            p(s, kActionRight, 0) = params.left_end_stay;
        } else if (s == S - 1) {
            p(s, kActionRight, s) = params.right_end_stay;
            p(s, kActionRight, s - 1) = params.right_end_back;
        } else {
            p(s, kActionRight, s + 1) = params.right_advance;
            p(s, kActionRight, s) = params.right_stay;
            p(s, kActionRight, s - 1) = params.right_back;
        }
    }
    stationary_r[static_cast<std::size_t>(0) * A + kActionLeft] = params.reward_left;
    stationary_r[static_cast<std::size_t>(S - 1) * A + kActionRight] = params.reward_right;

    std::vector<double> P, r;
    P.reserve(static_cast<std::size_t>(H) * stationary_p.size());
    r.reserve(static_cast<std::size_t>(H) * stationary_r.size());
    for (int h = 0; h < H; ++h) {
        P.insert(P.end(), stationary_p.begin(), stationary_p.end());
        r.insert(r.end(), stationary_r.begin(), stationary_r.end());
    }
    std::vector<double> d1(S, 0.0);
    d1[0] = 1.0;
    return TabularMdp(S, A, H, std::move(P), std::move(r), std::move(d1), params.reward_kind);
}

}  // namespace dprl
