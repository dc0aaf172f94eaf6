#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dprl/binary_mechanism.hpp"
#include "dprl/count_tables.hpp"
#include "dprl/projection.hpp"
#include "dprl/rng.hpp"

namespace dprl {

enum class PrivatizerKind { none, central, local };

struct PrivatizerConfig {
    PrivatizerKind kind = PrivatizerKind::none;
    double epsilon = 1.0;
    double beta = 0.1;
    std::int64_t episodes = 1;  // K, the stream capacity
    int horizon = 1;
    int num_states = 1;
    int num_actions = 1;
    bool zero_noise = false;  // test hook: mechanisms run without noise
    /// Replaces the analytic E bound wherever the algorithm consumes it
    /// (projection slack, count shifts, bonus). The injected noise is not
    /// affected. Needed because the rigorous bound makes the E-proportional
    /// bonus terms exceed H at simulation scale.
    std::optional<double> e_bound_override;
};

/// Private counters satisfying the accuracy contract: consistent
/// (marginal equals the destination sum exactly), never re-randomized
/// after release, with the uniform deviation bound E attached.
/// Snapshots are immutable once returned.
struct PrivateCounts {
    int H = 0, S = 0, A = 0;
    std::vector<double> n_sa;   // (h, s, a)
    std::vector<double> n_sas;  // (h, s, a, s')
    std::vector<double> r_sa;   // (h, s, a)
    double e_bound = 0.0;

    void resize(int horizon, int num_states, int num_actions) {
        H = horizon;
        S = num_states;
        A = num_actions;
        n_sa.assign(static_cast<std::size_t>(H) * S * A, 0.0);
        n_sas.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
        r_sa.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    }

    std::size_t sa_index(int h, int s, int a) const {
        return (static_cast<std::size_t>(h) * S + s) * A + a;
    }
    double visits(int h, int s, int a) const { return n_sa[sa_index(h, s, a)]; }
    double visits(int h, int s, int a, int next) const {
        return n_sas[sa_index(h, s, a) * S + next];
    }
    double reward_sum(int h, int s, int a) const { return r_sa[sa_index(h, s, a)]; }
    /// Derived state visitation: sum of visits over actions.
    double state_visits(int h, int s) const {
        double out = 0.0;
        for (int a = 0; a < A; ++a) out += visits(h, s, a);
        return out;
    }
};

inline int ceil_log2(std::int64_t n) {
    int level = 0;
    while ((std::int64_t{1} << level) < n) ++level;
    return level;
}

/// Union-bound constant for the Local privatizer's accumulated Laplace
/// noise: E = 4 * (3H/eps) * sqrt(8 K ln(HSAT/beta)) folds into the
/// documented form c * (H/eps) * sqrt(K ln(HSAT/beta)) with c = 12*sqrt(8).
inline constexpr double kLaplaceUnionConstant = 33.9411255;

/// Analytic E bound per privatizer kind. The central formula reuses the
/// Binary Mechanism's documented tail constant.
inline double privatizer_e_bound(const PrivatizerConfig& cfg) {
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("privatizer_e_bound: epsilon <= 0");
    if (!(cfg.beta > 0.0 && cfg.beta < 1.0))
        throw std::invalid_argument("privatizer_e_bound: beta outside (0,1)");
    const double H = cfg.horizon;
    const double T = static_cast<double>(cfg.episodes) * cfg.horizon;
    const double log_term =
        std::log(std::max(2.0, H * cfg.num_states * cfg.num_actions * T / cfg.beta));
    switch (cfg.kind) {
        case PrivatizerKind::none:
            return 0.0;
        case PrivatizerKind::central:
            return kBmErrorConstant * (H / cfg.epsilon) * log_term * log_term;
        case PrivatizerKind::local:
            return kLaplaceUnionConstant * (H / cfg.epsilon) *
                   std::sqrt(static_cast<double>(cfg.episodes) * log_term);
    }
    throw std::logic_error("privatizer_e_bound: unknown kind");
}

inline double effective_e_bound(const PrivatizerConfig& cfg) {
    if (cfg.kind == PrivatizerKind::none) return 0.0;
    return cfg.e_bound_override.value_or(privatizer_e_bound(cfg));
}

/// Converts the true counters of one run into private ones, once per
/// episode, in episode order. An instance is owned by exactly one run.
class Privatizer {
  public:
    virtual ~Privatizer() = default;
    virtual const PrivateCounts& on_episode_end(const CountTables& counts,
                                                const Trajectory& traj, Rng& rng) = 0;
    virtual double e_bound() const = 0;
};

/// Non-private baseline: passthrough of the true counters with E = 0.
class NonePrivatizer final : public Privatizer {
  public:
    explicit NonePrivatizer(const PrivatizerConfig& cfg) {
        out_.resize(cfg.horizon, cfg.num_states, cfg.num_actions);
    }

    const PrivateCounts& on_episode_end(const CountTables& counts, const Trajectory&,
                                        Rng&) override {
        const int H = out_.H, S = out_.S, A = out_.A;
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const std::size_t i = out_.sa_index(h, s, a);
                    out_.n_sa[i] = static_cast<double>(counts.visits(h, s, a));
                    out_.r_sa[i] = counts.reward_sum(h, s, a);
                    for (int t = 0; t < S; ++t)
                        out_.n_sas[i * S + t] = static_cast<double>(counts.visits(h, s, a, t));
                }
        return out_;
    }

    double e_bound() const override { return 0.0; }

  private:
    PrivateCounts out_;
};

/// Central (JDP) privatizer: one Binary Mechanism counter stream per
/// touched (h,s,a) visit cell, per touched (h,s,a,s') destination cell and
/// per touched (h,s,a) reward cell, each budgeted eps' = eps/(3H ceil(log2 K)).
/// Counters are allocated on first touch and backfilled with the zeros the
/// stream would already have seen; untouched cells release an exact zero.
/// Noisy marginals and destination rows then pass through the consistency
/// projection (slack E/4) and the E/(2S), E/2 shifts. Reward releases are
/// raw prefix sums, no projection.
class CentralPrivatizer final : public Privatizer {
  public:
    explicit CentralPrivatizer(const PrivatizerConfig& cfg)
        : cfg_(cfg),
          eps_prime_(cfg.epsilon / (3.0 * cfg.horizon * std::max(1, ceil_log2(cfg.episodes)))),
          e_(effective_e_bound(cfg)) {
        if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("CentralPrivatizer: epsilon <= 0");
        const std::size_t cells = static_cast<std::size_t>(cfg.horizon) * cfg.num_states *
                                  cfg.num_actions;
        sa_streams_.resize(cells);
        reward_streams_.resize(cells);
        dest_streams_.resize(cells * cfg.num_states);
        out_.resize(cfg.horizon, cfg.num_states, cfg.num_actions);
        noisy_sa_.assign(cells, 0.0);
        scratch_.noisy_dest.resize(cfg.num_states);
    }

    const PrivateCounts& on_episode_end(const CountTables& counts, const Trajectory& traj,
                                        Rng& rng) override {
        if (episode_ >= cfg_.episodes)
            throw std::logic_error("CentralPrivatizer: episode budget K exceeded");
        ++episode_;
        const int H = out_.H, S = out_.S, A = out_.A;
        if (static_cast<int>(traj.steps.size()) != H)
            throw std::invalid_argument("CentralPrivatizer: trajectory length mismatch");

        // Allocate streams first touched this episode, in index order, each
        // backfilled with the zeros from the episodes before its first touch.
        touched_sa_.clear();
        touched_dest_.clear();
        for (int h = 0; h < H; ++h) {
            const auto& step = traj.steps[h];
            const int next = h + 1 < H ? traj.steps[h + 1].state : traj.terminal_state;
            touched_sa_.push_back(out_.sa_index(h, step.state, step.action));
            touched_dest_.push_back(out_.sa_index(h, step.state, step.action) * S + next);
        }
        std::sort(touched_sa_.begin(), touched_sa_.end());
        std::sort(touched_dest_.begin(), touched_dest_.end());
        for (std::size_t i : touched_sa_) {
            ensure_stream(sa_streams_[i], rng);
            ensure_stream(reward_streams_[i], rng);
        }
        for (std::size_t i : touched_dest_) ensure_stream(dest_streams_[i], rng);

        // One append per active stream per episode, index order.
        for (int h = 0; h < H; ++h) {
            epi_visit_.assign(static_cast<std::size_t>(S) * A, 0.0);
            epi_reward_.assign(static_cast<std::size_t>(S) * A, 0.0);
            epi_dest_.assign(static_cast<std::size_t>(S) * A * S, 0.0);
            const auto& step = traj.steps[h];
            const int next = h + 1 < H ? traj.steps[h + 1].state : traj.terminal_state;
            const std::size_t local = static_cast<std::size_t>(step.state) * A + step.action;
            epi_visit_[local] = 1.0;
            epi_reward_[local] = step.reward;
            epi_dest_[local * S + next] = 1.0;
            const std::size_t base = static_cast<std::size_t>(h) * S * A;
            for (std::size_t c = 0; c < static_cast<std::size_t>(S) * A; ++c) {
                if (sa_streams_[base + c]) sa_streams_[base + c]->append(epi_visit_[c], rng);
                if (reward_streams_[base + c])
                    reward_streams_[base + c]->append(epi_reward_[c], rng);
                for (int t = 0; t < S; ++t) {
                    const std::size_t d = (base + c) * S + t;
                    if (dest_streams_[d]) dest_streams_[d]->append(epi_dest_[c * S + t], rng);
                }
            }
        }

        // Release, project, shift.
        (void)counts;
        for (std::size_t i = 0; i < sa_streams_.size(); ++i) {
            const double noisy_total = sa_streams_[i] ? sa_streams_[i]->release() : 0.0;
            noisy_sa_[i] = noisy_total;
            for (int t = 0; t < S; ++t) {
                const auto& stream = dest_streams_[i * S + t];
                scratch_.noisy_dest[t] = stream ? stream->release() : 0.0;
            }
            scratch_.noisy_total = noisy_total;
            scratch_.slack = e_ / 4.0;
            const ProjectionSolution sol = project(scratch_);
            auto [dest, total] = finalize_counts(sol, S, e_);
            for (int t = 0; t < S; ++t) out_.n_sas[i * S + t] = dest[t];
            out_.n_sa[i] = total;
            out_.r_sa[i] = reward_streams_[i] ? reward_streams_[i]->release() : 0.0;
        }
        out_.e_bound = e_;
        return out_;
    }

    double e_bound() const override { return e_; }
    double eps_prime() const { return eps_prime_; }
    /// Noisy marginal N-hat before projection; audit hook for tests.
    double noisy_marginal(int h, int s, int a) const {
        return noisy_sa_[out_.sa_index(h, s, a)];
    }

  private:
    void ensure_stream(std::unique_ptr<BinaryMechanismCounter>& slot, Rng& rng) {
        if (slot) return;
        slot = std::make_unique<BinaryMechanismCounter>(cfg_.episodes, eps_prime_,
                                                        cfg_.zero_noise);
        slot->append_zeros(episode_ - 1, rng);
    }

    PrivatizerConfig cfg_;
    double eps_prime_;
    double e_;
    std::int64_t episode_ = 0;
    std::vector<std::unique_ptr<BinaryMechanismCounter>> sa_streams_;
    std::vector<std::unique_ptr<BinaryMechanismCounter>> reward_streams_;
    std::vector<std::unique_ptr<BinaryMechanismCounter>> dest_streams_;
    std::vector<double> noisy_sa_;
    std::vector<std::size_t> touched_sa_, touched_dest_;
    std::vector<double> epi_visit_, epi_reward_, epi_dest_;
    ProjectionProblem scratch_;
    PrivateCounts out_;
};

/// Local (LDP) privatizer: every per-episode indicator and reward cell is
/// perturbed with Laplace(3H/eps) before aggregation, so the agent only
/// ever accumulates privatized statistics. The noisy sums then pass
/// through the same projection-and-shift pipeline as the central path.
class LocalPrivatizer final : public Privatizer {
  public:
    explicit LocalPrivatizer(const PrivatizerConfig& cfg)
        : cfg_(cfg), noise_scale_(3.0 * cfg.horizon / cfg.epsilon), e_(effective_e_bound(cfg)) {
        if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("LocalPrivatizer: epsilon <= 0");
        const std::size_t cells = static_cast<std::size_t>(cfg.horizon) * cfg.num_states *
                                  cfg.num_actions;
        accum_sa_.assign(cells, 0.0);
        accum_reward_.assign(cells, 0.0);
        accum_dest_.assign(cells * cfg.num_states, 0.0);
        out_.resize(cfg.horizon, cfg.num_states, cfg.num_actions);
        scratch_.noisy_dest.resize(cfg.num_states);
    }

    const PrivateCounts& on_episode_end(const CountTables& counts, const Trajectory& traj,
                                        Rng& rng) override {
        if (episode_ >= cfg_.episodes)
            throw std::logic_error("LocalPrivatizer: episode budget K exceeded");
        ++episode_;
        const int H = out_.H, S = out_.S, A = out_.A;
        if (static_cast<int>(traj.steps.size()) != H)
            throw std::invalid_argument("LocalPrivatizer: trajectory length mismatch");
        (void)counts;

        for (int h = 0; h < H; ++h) {
            const auto& step = traj.steps[h];
            const int next = h + 1 < H ? traj.steps[h + 1].state : traj.terminal_state;
            const std::size_t visited = out_.sa_index(h, step.state, step.action);
            const std::size_t base = static_cast<std::size_t>(h) * S * A;
            for (std::size_t c = base; c < base + static_cast<std::size_t>(S) * A; ++c) {
                accum_sa_[c] += (c == visited ? 1.0 : 0.0) + noise(rng);
                for (int t = 0; t < S; ++t) {
                    const bool hit = c == visited && t == next;
                    accum_dest_[c * S + t] += (hit ? 1.0 : 0.0) + noise(rng);
                }
                accum_reward_[c] += (c == visited ? step.reward : 0.0) + noise(rng);
            }
        }

        for (std::size_t i = 0; i < accum_sa_.size(); ++i) {
            for (int t = 0; t < S; ++t) scratch_.noisy_dest[t] = accum_dest_[i * S + t];
            scratch_.noisy_total = accum_sa_[i];
            scratch_.slack = e_ / 4.0;
            const ProjectionSolution sol = project(scratch_);
            auto [dest, total] = finalize_counts(sol, S, e_);
            for (int t = 0; t < S; ++t) out_.n_sas[i * S + t] = dest[t];
            out_.n_sa[i] = total;
            out_.r_sa[i] = accum_reward_[i];
        }
        out_.e_bound = e_;
        return out_;
    }

    double e_bound() const override { return e_; }

  private:
    double noise(Rng& rng) {
        return cfg_.zero_noise ? 0.0 : laplace_sample(noise_scale_, rng);
    }

    PrivatizerConfig cfg_;
    double noise_scale_;
    double e_;
    std::int64_t episode_ = 0;
    std::vector<double> accum_sa_, accum_reward_, accum_dest_;
    ProjectionProblem scratch_;
    PrivateCounts out_;
};

inline std::unique_ptr<Privatizer> make_privatizer(const PrivatizerConfig& cfg) {
    switch (cfg.kind) {
        case PrivatizerKind::none:
            return std::make_unique<NonePrivatizer>(cfg);
        case PrivatizerKind::central:
            return std::make_unique<CentralPrivatizer>(cfg);
        case PrivatizerKind::local:
            return std::make_unique<LocalPrivatizer>(cfg);
    }
    throw std::logic_error("make_privatizer: unknown kind");
}

}  // namespace dprl
