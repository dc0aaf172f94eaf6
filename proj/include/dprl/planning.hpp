#pragma once

#include <span>
#include <vector>

#include "dprl/tabular_mdp.hpp"

namespace dprl {

/// Exact solution of the Bellman optimality equations.
/// v(h, s) and q(h, s, a) are stored for h in [0, H); V at H is zero.
struct ValueSolution {
    int S = 0, A = 0, H = 0;
    std::vector<double> v;  // (h, s)
    std::vector<double> q;  // (h, s, a)
    Policy greedy;

    double value(int h, int s) const { return v[static_cast<std::size_t>(h) * S + s]; }
    double qvalue(int h, int s, int a) const {
        return q[(static_cast<std::size_t>(h) * S + s) * A + a];
    }
};

/// Backward induction on the true model: Q*_h = r_h + P_h V*_{h+1},
/// V*_h = max_a Q*_h, with V*_{H+1} = 0. Argmax ties go to the lowest
/// action index.
inline ValueSolution exact_value_iteration(const TabularMdp& mdp) {
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    ValueSolution sol;
    sol.S = S;
    sol.A = A;
    sol.H = H;
    sol.v.assign(static_cast<std::size_t>(H) * S, 0.0);
    sol.q.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    sol.greedy = Policy(H, S);
    std::vector<double> next(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            double best = 0.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                const auto row = mdp.transition_row(h, s, a);
                double ev = 0.0;
                for (int t = 0; t < S; ++t) ev += row[t] * next[t];
                const double qv = mdp.mean_reward(h, s, a) + ev;
                sol.q[(static_cast<std::size_t>(h) * S + s) * A + a] = qv;
                if (a == 0 || qv > best) {
                    best = qv;
                    best_a = a;
                }
            }
            sol.v[static_cast<std::size_t>(h) * S + s] = best;
            sol.greedy.action(h, s) = best_a;
        }
        for (int s = 0; s < S; ++s) next[s] = sol.v[static_cast<std::size_t>(h) * S + s];
    }
    return sol;
}

/// Exact evaluation of a deterministic policy on the true model (no
/// sampling): V^pi_h(s) = r_h(s, pi) + P_h(.|s, pi) V^pi_{h+1}.
inline std::vector<double> policy_evaluation(const TabularMdp& mdp, const Policy& policy) {
    const int S = mdp.num_states(), H = mdp.horizon();
    std::vector<double> v(static_cast<std::size_t>(H) * S, 0.0);
    std::vector<double> next(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            const int a = policy.action(h, s);
            const auto row = mdp.transition_row(h, s, a);
            double ev = 0.0;
            for (int t = 0; t < S; ++t) ev += row[t] * next[t];
            v[static_cast<std::size_t>(h) * S + s] = mdp.mean_reward(h, s, a) + ev;
        }
        for (int s = 0; s < S; ++s) next[s] = v[static_cast<std::size_t>(h) * S + s];
    }
    return v;
}

/// Expected value of the initial state under d1.
inline double initial_value(const TabularMdp& mdp, std::span<const double> v_first_step) {
    double out = 0.0;
    const auto d1 = mdp.initial_dist();
    for (int s = 0; s < mdp.num_states(); ++s) out += d1[s] * v_first_step[s];
    return out;
}

}  // namespace dprl
