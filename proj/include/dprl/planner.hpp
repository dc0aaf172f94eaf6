#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dprl/count_tables.hpp"
#include "dprl/planning.hpp"
#include "dprl/privatizer.hpp"
#include "dprl/rng.hpp"
#include "dprl/tabular_mdp.hpp"

namespace dprl {

enum class BonusKind { bernstein, hoeffding };

struct RunConfig {
    std::int64_t episodes = 1;  // K
    double beta = 0.1;
    double bonus_scale = 1.0;
    std::uint64_t seed = 0;
    PrivatizerKind privatizer = PrivatizerKind::none;
    double epsilon = 1.0;
    bool zero_noise = false;
    std::optional<double> e_bound_override;
    BonusKind bonus = BonusKind::bernstein;
};

/// Optimistic planner state carried across episodes. q is clipped from
/// above by its previous-episode value every update, so it is cellwise
/// nonincreasing in k and stays in [0, H].
struct PlannerState {
    int H = 0, S = 0, A = 0;
    double iota = 0.0;         // log(30 H S A T / beta)
    double bonus_scale = 1.0;
    BonusKind bonus_kind = BonusKind::bernstein;
    std::vector<double> q;      // (h, s, a), persists across episodes
    std::vector<double> v;      // (h, s), h in [0, H]; v at H is zero
    std::vector<double> p_est;  // (h, s, a, s'), last episode's estimates
    std::vector<double> r_est;  // (h, s, a)
    std::vector<double> bonus;  // (h, s, a)
    // Estimate audit, accumulated over every row ever constructed.
    double max_row_sum_error = 0.0;
    double min_transition_prob = std::numeric_limits<double>::infinity();

    PlannerState(int horizon, int num_states, int num_actions, std::int64_t episodes,
                 double beta, double scale, BonusKind kind)
        : H(horizon), S(num_states), A(num_actions),
          iota(std::log(30.0 * horizon * num_states * num_actions *
                        (static_cast<double>(episodes) * horizon) / beta)),
          bonus_scale(scale),
          bonus_kind(kind),
          q(static_cast<std::size_t>(H) * S * A, static_cast<double>(H)),
          v(static_cast<std::size_t>(H + 1) * S, 0.0),
          p_est(static_cast<std::size_t>(H) * S * A * S, 0.0),
          r_est(static_cast<std::size_t>(H) * S * A, 0.0),
          bonus(static_cast<std::size_t>(H) * S * A, 0.0) {}

    std::size_t sa_index(int h, int s, int a) const {
        return (static_cast<std::size_t>(h) * S + s) * A + a;
    }
    double qvalue(int h, int s, int a) const { return q[sa_index(h, s, a)]; }
    double value(int h, int s) const { return v[static_cast<std::size_t>(h) * S + s]; }
};

struct PrivateEstimates {
    std::vector<double> p;        // (h, s, a, s')
    std::vector<double> r;        // (h, s, a)
    std::vector<char> defined;    // (h, s, a): marginal count was positive
};

/// Private plug-in estimates: P = Ntil(s,a,.)/Ntil(s,a) and the reward
/// average truncated into [0, 1]. Rows with a zero marginal but nonzero
/// destination mass violate the count contract.
inline PrivateEstimates private_estimates(const PrivateCounts& pc) {
    const int H = pc.H, S = pc.S, A = pc.A;
    PrivateEstimates est;
    est.p.assign(pc.n_sas.size(), 0.0);
    est.r.assign(pc.n_sa.size(), 0.0);
    est.defined.assign(pc.n_sa.size(), 0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const std::size_t i = pc.sa_index(h, s, a);
                const double total = pc.n_sa[i];
                if (total <= 0.0) {
                    for (int t = 0; t < S; ++t)
                        if (pc.n_sas[i * S + t] != 0.0)
                            throw std::logic_error(
                                "private_estimates: zero marginal with nonzero destination mass");
                    continue;
                }
                est.defined[i] = 1;
                for (int t = 0; t < S; ++t) est.p[i * S + t] = pc.n_sas[i * S + t] / total;
                est.r[i] = std::clamp(pc.r_sa[i] / total, 0.0, 1.0);
            }
    return est;
}

/// The variance-aware private exploration bonus. `ntil_next_state` holds
/// the action-summed next-step counts Ntil_{h+1}(s'); pass an empty span
/// at the last step, where the next value function is identically zero and
/// the compensation term vanishes. A nonpositive marginal count means the
/// cell is unexplored and the bonus is infinite.
inline double bernstein_bonus(double ntil_sa, std::span<const double> p_row,
                              std::span<const double> v_next,
                              std::span<const double> ntil_next_state, double iota,
                              double e_bound, int H, int S, int A, double bonus_scale) {
    if (ntil_sa <= 0.0) return std::numeric_limits<double>::infinity();
    double mean = 0.0, second = 0.0;
    for (std::size_t t = 0; t < p_row.size(); ++t) {
        mean += p_row[t] * v_next[t];
        second += p_row[t] * v_next[t] * v_next[t];
    }
    const double variance = std::max(0.0, second - mean * mean);
    const double term_var = 2.0 * std::sqrt(variance * iota / ntil_sa);
    const double term_hoeffding = std::sqrt(2.0 * iota / ntil_sa);
    const double term_privacy = 20.0 * H * S * e_bound * iota / ntil_sa;
    double term_compensation = 0.0;
    if (!ntil_next_state.empty()) {
        const double c = 1000.0 * 1000.0;
        const double h2 = static_cast<double>(H) * H;
        const double iota2 = iota * iota;
        const double num1 = c * std::pow(static_cast<double>(H), 3.0) * S * A * iota2;
        const double num2 = c * std::pow(static_cast<double>(H), 4.0) * std::pow(S, 4.0) * A * A *
                            e_bound * e_bound * iota2 * iota2;
        const double num3 =
            c * std::pow(static_cast<double>(H), 6.0) * std::pow(S, 4.0) * A * A * iota2 * iota2;
        double inner = 0.0;
        for (std::size_t t = 0; t < p_row.size(); ++t) {
            const double n_next = ntil_next_state[t];
            double m = h2;
            if (n_next > 0.0) m = std::min((num1 + (num2 + num3) / n_next) / n_next, h2);
            inner += p_row[t] * m;
        }
        term_compensation = 4.0 * std::sqrt(iota) * std::sqrt(inner / ntil_sa);
    }
    return bonus_scale * (term_var + term_hoeffding + term_privacy + term_compensation);
}

/// One optimistic backward sweep (episode k): recompute estimates and
/// bonuses from the current private counts, clip q against its previous
/// value and H, extract the greedy policy (ties to the lowest action).
inline Policy backward_induction(PlannerState& st, const PrivateCounts& pc) {
    const int H = st.H, S = st.S, A = st.A;
    if (pc.H != H || pc.S != S || pc.A != A)
        throw std::invalid_argument("backward_induction: count shape mismatch");
    Policy policy(H, S);
    std::vector<double> ntil_next;  // Ntil_{h+1}(s') for the step below
    std::vector<double> p_row(S);
    for (int h = H - 1; h >= 0; --h) {
        ntil_next.clear();
        if (h + 1 < H) {
            ntil_next.resize(S);
            for (int s = 0; s < S; ++s) ntil_next[s] = pc.state_visits(h + 1, s);
        }
        const std::span<const double> v_next{st.v.data() + static_cast<std::size_t>(h + 1) * S,
                                             static_cast<std::size_t>(S)};
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const std::size_t i = st.sa_index(h, s, a);
                const double total = pc.n_sa[i];
                double target;
                if (total <= 0.0) {
                    st.bonus[i] = std::numeric_limits<double>::infinity();
                    st.r_est[i] = 0.0;
                    target = static_cast<double>(H);
                } else {
                    double row_sum = 0.0, expected_v = 0.0;
                    for (int t = 0; t < S; ++t) {
                        const double p = pc.n_sas[i * S + t] / total;
                        p_row[t] = p;
                        st.p_est[i * S + t] = p;
                        row_sum += p;
                        expected_v += p * v_next[t];
                        if (p < st.min_transition_prob) st.min_transition_prob = p;
                    }
                    const double row_err = std::abs(row_sum - 1.0);
                    if (row_err > st.max_row_sum_error) st.max_row_sum_error = row_err;
                    const double r = std::clamp(pc.r_sa[i] / total, 0.0, 1.0);
                    st.r_est[i] = r;
                    double b;
                    if (st.bonus_kind == BonusKind::hoeffding) {
                        b = st.bonus_scale * H * std::sqrt(st.iota / total);
                    } else {
                        b = bernstein_bonus(total, p_row, v_next, ntil_next, st.iota, pc.e_bound,
                                            H, S, A, st.bonus_scale);
                    }
                    st.bonus[i] = b;
                    target = r + expected_v + b;
                }
                const double clipped = std::min({st.q[i], static_cast<double>(H), target});
                st.q[i] = clipped;
            }
            double best = -1.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                const double qv = st.q[st.sa_index(h, s, a)];
                if (qv > best) {
                    best = qv;
                    best_a = a;
                }
            }
            st.v[static_cast<std::size_t>(h) * S + s] = best;
            policy.action(h, s) = best_a;
        }
    }
    return policy;
}

/// Per-run output: regret traces plus audit aggregates. Cumulative is the
/// running prefix sum of the per-episode regrets.
struct RegretRecord {
    std::string arm_label;
    std::uint64_t seed = 0;
    std::vector<double> per_episode_regret;
    std::vector<double> cumulative;
    bool assumption1_held = true;
    double max_row_sum_error = 0.0;
    double min_transition_prob = std::numeric_limits<double>::infinity();
    std::uint64_t trace_hash = 1469598103934665603ULL;  // FNV over the action stream

    void note_trajectory(const Trajectory& traj) {
        auto fold = [&](std::uint64_t x) {
            trace_hash ^= x;
            trace_hash *= 1099511628211ULL;
        };
        for (const auto& step : traj.steps) {
            fold(static_cast<std::uint64_t>(step.state));
            fold(static_cast<std::uint64_t>(step.action));
            std::uint64_t bits;
            static_assert(sizeof bits == sizeof step.reward);
            std::memcpy(&bits, &step.reward, sizeof bits);
            fold(bits);
        }
        fold(static_cast<std::uint64_t>(traj.terminal_state));
    }

    bool same_trace(const RegretRecord& other) const {
        return seed == other.seed && trace_hash == other.trace_hash &&
               per_episode_regret == other.per_episode_regret && cumulative == other.cumulative;
    }
};

/// Optional per-episode observer, called after planning and acting.
using EpisodeObserver =
    std::function<void(std::int64_t episode, const PlannerState& state, const Policy& policy)>;

namespace detail {

inline void audit_assumption1(const CountTables& counts, const PrivateCounts& pc,
                              RegretRecord& rec) {
    if (!rec.assumption1_held) return;
    const double e = pc.e_bound;
    const double tol = 1e-9;
    const int H = pc.H, S = pc.S, A = pc.A;
    for (int h = 0; h < H && rec.assumption1_held; ++h)
        for (int s = 0; s < S && rec.assumption1_held; ++s)
            for (int a = 0; a < A; ++a) {
                const std::size_t i = pc.sa_index(h, s, a);
                const double n_true = static_cast<double>(counts.visits(h, s, a));
                if (pc.n_sa[i] < n_true - tol || std::abs(pc.n_sa[i] - n_true) > e + tol ||
                    std::abs(pc.r_sa[i] - counts.reward_sum(h, s, a)) > e + tol) {
                    rec.assumption1_held = false;
                    break;
                }
                for (int t = 0; t < S; ++t)
                    if (std::abs(pc.n_sas[i * S + t] -
                                 static_cast<double>(counts.visits(h, s, a, t))) > e + tol) {
                        rec.assumption1_held = false;
                        break;
                    }
                if (!rec.assumption1_held) break;
            }
}

inline RegretRecord run_episodic(const TabularMdp& mdp, const RunConfig& cfg,
                                 const EpisodeObserver& observer) {
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    if (cfg.episodes < 1) throw std::invalid_argument("run: episodes must be >= 1");
    if (!(cfg.beta > 0.0 && cfg.beta < 1.0))
        throw std::invalid_argument("run: beta outside (0,1)");

    PrivatizerConfig pcfg;
    pcfg.kind = cfg.privatizer;
    pcfg.epsilon = cfg.epsilon;
    pcfg.beta = cfg.beta;
    pcfg.episodes = cfg.episodes;
    pcfg.horizon = H;
    pcfg.num_states = S;
    pcfg.num_actions = A;
    pcfg.zero_noise = cfg.zero_noise;
    pcfg.e_bound_override = cfg.e_bound_override;
    auto privatizer = make_privatizer(pcfg);

    const ValueSolution optimal = exact_value_iteration(mdp);
    CountTables counts(H, S, A);
    PlannerState st(H, S, A, cfg.episodes, cfg.beta, cfg.bonus_scale, cfg.bonus);
    Rng rng(cfg.seed);

    PrivateCounts initial;  // episode 1 plans from all-zero private counts
    initial.resize(H, S, A);
    initial.e_bound = privatizer->e_bound();
    const PrivateCounts* pc = &initial;

    RegretRecord rec;
    rec.seed = cfg.seed;
    rec.per_episode_regret.reserve(cfg.episodes);
    rec.cumulative.reserve(cfg.episodes);
    double cumulative = 0.0;
    for (std::int64_t k = 1; k <= cfg.episodes; ++k) {
        const Policy policy = backward_induction(st, *pc);
        const Trajectory traj = sample_episode(mdp, policy, rng);
        const std::vector<double> v_pi = policy_evaluation(mdp, policy);
        const int s1 = traj.steps.front().state;
        const double regret = optimal.value(0, s1) - v_pi[s1];
        cumulative += regret;
        rec.per_episode_regret.push_back(regret);
        rec.cumulative.push_back(cumulative);
        rec.note_trajectory(traj);
        counts.update_with_trajectory(traj);
        pc = &privatizer->on_episode_end(counts, traj, rng);
        audit_assumption1(counts, *pc, rec);
        if (observer) observer(k, st, policy);
    }
    rec.max_row_sum_error = st.max_row_sum_error;
    rec.min_transition_prob = st.min_transition_prob;
    return rec;
}

}  // namespace detail

/// Full DP-UCBVI run: plan optimistically from private counts, deploy the
/// greedy policy, feed the trajectory to the privatizer, repeat for K
/// episodes. Per-episode regret is V*(s_1) minus the exact evaluation of
/// the deployed policy. Fixed seed, fixed record.
inline RegretRecord dp_ucbvi_run(const TabularMdp& mdp, const RunConfig& cfg,
                                 const EpisodeObserver& observer = nullptr) {
    return detail::run_episodic(mdp, cfg, observer);
}

/// Non-private UCBVI comparison arm: the same loop with the Hoeffding
/// bonus bonus_scale * H * sqrt(iota / N) on the true counts.
inline RegretRecord ucbvi_hoeffding_baseline(const TabularMdp& mdp, RunConfig cfg,
                                             const EpisodeObserver& observer = nullptr) {
    cfg.privatizer = PrivatizerKind::none;
    cfg.bonus = BonusKind::hoeffding;
    cfg.e_bound_override.reset();
    return detail::run_episodic(mdp, cfg, observer);
}

}  // namespace dprl
