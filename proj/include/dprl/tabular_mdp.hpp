#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dprl/rng.hpp"

namespace dprl {

inline constexpr double kRowSumTol = 1e-12;

enum class RewardKind { deterministic, bernoulli };

/// Finite-horizon episodic MDP with non-stationary transitions.
///
/// Indexing is 0-based everywhere: steps h in [0, H), states in [0, S),
/// actions in [0, A). P[h,s,a] is a probability row over next states,
/// r_mean[h,s,a] is the mean reward in [0, 1], d1 the initial distribution.
/// Immutable after construction and safe to share across concurrent runs.
class TabularMdp {
  public:
    TabularMdp(int num_states, int num_actions, int horizon,
               std::vector<double> transitions, std::vector<double> mean_rewards,
               std::vector<double> initial_dist, RewardKind reward_kind)
        : S_(num_states),
          A_(num_actions),
          H_(horizon),
          P_(std::move(transitions)),
          r_(std::move(mean_rewards)),
          d1_(std::move(initial_dist)),
          reward_kind_(reward_kind) {
        validate();
    }

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int horizon() const { return H_; }
    RewardKind reward_kind() const { return reward_kind_; }

    std::span<const double> transition_row(int h, int s, int a) const {
        return {P_.data() + (static_cast<std::size_t>((h * S_ + s) * A_ + a)) * S_,
                static_cast<std::size_t>(S_)};
    }
    double mean_reward(int h, int s, int a) const {
        return r_[static_cast<std::size_t>((h * S_ + s) * A_ + a)];
    }
    std::span<const double> initial_dist() const { return d1_; }

    const std::vector<double>& raw_transitions() const { return P_; }
    const std::vector<double>& raw_rewards() const { return r_; }

  private:
    void validate() const {
        if (S_ < 1 || A_ < 1 || H_ < 1)
            throw std::invalid_argument("TabularMdp: S, A, H must all be >= 1");
        const std::size_t cells = static_cast<std::size_t>(H_) * S_ * A_;
        if (P_.size() != cells * S_ || r_.size() != cells ||
            d1_.size() != static_cast<std::size_t>(S_))
            throw std::invalid_argument("TabularMdp: tensor sizes do not match (S, A, H)");
        for (int h = 0; h < H_; ++h)
            for (int s = 0; s < S_; ++s)
                for (int a = 0; a < A_; ++a) {
                    double sum = 0.0;
                    for (double p : transition_row(h, s, a)) {
                        if (p < 0.0)
                            throw std::invalid_argument(
                                "TabularMdp: negative transition probability at (h=" +
                                std::to_string(h) + ",s=" + std::to_string(s) +
                                ",a=" + std::to_string(a) + ")");
                        sum += p;
                    }
                    if (std::abs(sum - 1.0) > kRowSumTol)
                        throw std::invalid_argument(
                            "TabularMdp: transition row (h=" + std::to_string(h) +
                            ",s=" + std::to_string(s) + ",a=" + std::to_string(a) +
                            ") sums to " + std::to_string(sum) + ", expected 1");
                    const double r = mean_reward(h, s, a);
                    if (!(r >= 0.0 && r <= 1.0))
                        throw std::invalid_argument(
                            "TabularMdp: mean reward outside [0,1] at (h=" + std::to_string(h) +
                            ",s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")");
                }
        double dsum = 0.0;
        for (double p : d1_) {
            if (p < 0.0) throw std::invalid_argument("TabularMdp: negative entry in d1");
            dsum += p;
        }
        if (std::abs(dsum - 1.0) > kRowSumTol)
            throw std::invalid_argument("TabularMdp: d1 sums to " + std::to_string(dsum) +
                                        ", expected 1");
    }

    int S_, A_, H_;
    std::vector<double> P_;   // (h, s, a, s')
    std::vector<double> r_;   // (h, s, a)
    std::vector<double> d1_;  // (s)
    RewardKind reward_kind_;
};

/// Deterministic policy: one action per (step, state).
class Policy {
  public:
    Policy() = default;
    Policy(int horizon, int num_states, int initial_action = 0)
        : H_(horizon), S_(num_states),
          actions_(static_cast<std::size_t>(horizon) * num_states, initial_action) {}

    int& action(int h, int s) { return actions_[static_cast<std::size_t>(h) * S_ + s]; }
    int action(int h, int s) const { return actions_[static_cast<std::size_t>(h) * S_ + s]; }
    int horizon() const { return H_; }
    int num_states() const { return S_; }

    bool operator==(const Policy&) const = default;

  private:
    int H_ = 0, S_ = 0;
    std::vector<int> actions_;
};

struct TrajectoryStep {
    int state;
    int action;
    double reward;
    bool operator==(const TrajectoryStep&) const = default;
};

/// One episode: exactly H (state, action, realized reward) steps plus the
/// terminal state reached after the last transition.
struct Trajectory {
    std::vector<TrajectoryStep> steps;
    int terminal_state = 0;
    bool operator==(const Trajectory&) const = default;
};

/// Rolls out `policy` for one episode. Draw order is fixed (initial state,
/// then per step: reward, next state) so a fixed seed reproduces the
/// trajectory bit for bit.
inline Trajectory sample_episode(const TabularMdp& mdp, const Policy& policy, Rng& rng) {
    if (policy.horizon() != mdp.horizon() || policy.num_states() != mdp.num_states())
        throw std::invalid_argument("sample_episode: policy shape does not match MDP");
    Trajectory traj;
    traj.steps.reserve(mdp.horizon());
    int state = rng.categorical(mdp.initial_dist());
    for (int h = 0; h < mdp.horizon(); ++h) {
        const int a = policy.action(h, state);
        if (a < 0 || a >= mdp.num_actions())
            throw std::out_of_range("sample_episode: policy action out of range");
        const double mean = mdp.mean_reward(h, state, a);
        const double reward = mdp.reward_kind() == RewardKind::bernoulli
                                  ? (rng.bernoulli(mean) ? 1.0 : 0.0)
                                  : mean;
        const int next = rng.categorical(mdp.transition_row(h, state, a));
        traj.steps.push_back({state, a, reward});
        state = next;
    }
    traj.terminal_state = state;
    return traj;
}

}  // namespace dprl
