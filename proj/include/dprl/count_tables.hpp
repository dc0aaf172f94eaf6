#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "dprl/tabular_mdp.hpp"

namespace dprl {

/// True (non-private) visitation and reward counters, the raw statistics
/// privatizers consume. Single writer per run; plain value type otherwise.
class CountTables {
  public:
    CountTables(int horizon, int num_states, int num_actions)
        : S_(num_states), A_(num_actions), H_(horizon),
          n_sa_(static_cast<std::size_t>(horizon) * num_states * num_actions, 0),
          n_sas_(static_cast<std::size_t>(horizon) * num_states * num_actions * num_states, 0),
          r_sa_(static_cast<std::size_t>(horizon) * num_states * num_actions, 0.0) {}

    int horizon() const { return H_; }
    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    std::int64_t episodes_seen() const { return episodes_seen_; }

    std::int64_t visits(int h, int s, int a) const { return n_sa_[sa_index(h, s, a)]; }
    std::int64_t visits(int h, int s, int a, int next) const {
        return n_sas_[sa_index(h, s, a) * S_ + next];
    }
    double reward_sum(int h, int s, int a) const { return r_sa_[sa_index(h, s, a)]; }

    /// Folds one trajectory into the tables: each (h, s_h, a_h, s_{h+1})
    /// bumps both visit counters, R accrues the realized reward.
    void update_with_trajectory(const Trajectory& traj) {
        if (static_cast<int>(traj.steps.size()) != H_)
            throw std::invalid_argument("CountTables: trajectory length does not match horizon");
        for (int h = 0; h < H_; ++h) {
            const auto& step = traj.steps[h];
            const int next = h + 1 < H_ ? traj.steps[h + 1].state : traj.terminal_state;
            if (step.state < 0 || step.state >= S_ || step.action < 0 || step.action >= A_ ||
                next < 0 || next >= S_)
                throw std::out_of_range("CountTables: trajectory index out of range");
            const std::size_t i = sa_index(h, step.state, step.action);
            ++n_sa_[i];
            ++n_sas_[i * S_ + next];
            r_sa_[i] += step.reward;
        }
        ++episodes_seen_;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"H", H_},       {"S", S_},           {"A", A_},
                              {"N_sa", n_sa_}, {"N_sas", n_sas_},   {"R_sa", r_sa_},
                              {"episodes_seen", episodes_seen_}};
    }

    std::size_t sa_index(int h, int s, int a) const {
        return (static_cast<std::size_t>(h) * S_ + s) * A_ + a;
    }

  private:
    int S_, A_, H_;
    std::vector<std::int64_t> n_sa_;   // (h, s, a)
    std::vector<std::int64_t> n_sas_;  // (h, s, a, s')
    std::vector<double> r_sa_;         // (h, s, a)
    std::int64_t episodes_seen_ = 0;
};

}  // namespace dprl
