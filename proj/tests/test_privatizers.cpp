#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "dprl/privatizer.hpp"
#include "dprl/riverswim.hpp"

using namespace dprl;

namespace {

PrivatizerConfig base_config(PrivatizerKind kind, const TabularMdp& mdp, std::int64_t episodes,
                             double epsilon = 1.0) {
    PrivatizerConfig cfg;
    cfg.kind = kind;
    cfg.epsilon = epsilon;
    cfg.beta = 0.1;
    cfg.episodes = episodes;
    cfg.horizon = mdp.horizon();
    cfg.num_states = mdp.num_states();
    cfg.num_actions = mdp.num_actions();
    return cfg;
}

Policy random_policy(const TabularMdp& mdp, Rng& rng) {
    Policy pol(mdp.horizon(), mdp.num_states());
    for (int h = 0; h < mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s)
            pol.action(h, s) = rng.bernoulli(0.5) ? 1 : 0;
    return pol;
}

}  // namespace

TEST_CASE("analytic E bounds", "[privatizer]") {
    const TabularMdp river = build_riverswim(6, 20);
    auto cfg = base_config(PrivatizerKind::none, river, 50000);
    REQUIRE(privatizer_e_bound(cfg) == 0.0);

    cfg.kind = PrivatizerKind::central;
    const double central = privatizer_e_bound(cfg);
    REQUIRE(central > 0.0);
    cfg.epsilon = 1e9;
    REQUIRE(privatizer_e_bound(cfg) < 1e-3);  // vanishes as epsilon grows
    cfg.epsilon = 1.0;

    cfg.kind = PrivatizerKind::local;
    const double local = privatizer_e_bound(cfg);
    REQUIRE(local / central > 10.0);  // sqrt(K) separation at paper scale

    cfg.e_bound_override = 3.25;
    REQUIRE(effective_e_bound(cfg) == 3.25);
    cfg.kind = PrivatizerKind::none;
    REQUIRE(effective_e_bound(cfg) == 0.0);
}

TEST_CASE("none privatizer is a passthrough", "[privatizer]") {
    RiverSwimParams params;
    params.reward_kind = RewardKind::deterministic;
    const TabularMdp river = build_riverswim(4, 5, params);
    auto privatizer = make_privatizer(base_config(PrivatizerKind::none, river, 10));
    CountTables counts(5, 4, 2);
    Rng rng(8);
    Policy left(river.horizon(), river.num_states());
    const PrivateCounts* pc = nullptr;
    for (int episode = 0; episode < 3; ++episode) {
        const Trajectory traj = sample_episode(river, left, rng);
        counts.update_with_trajectory(traj);
        pc = &privatizer->on_episode_end(counts, traj, rng);
    }
    REQUIRE(pc->e_bound == 0.0);
    REQUIRE(pc->visits(0, 0, 0) == 3.0);
    REQUIRE(pc->visits(0, 0, 0, 0) == 3.0);
    REQUIRE(pc->reward_sum(0, 0, 0) == Catch::Approx(3 * 0.05));
    REQUIRE(pc->visits(2, 1, 0) == 0.0);
}

TEST_CASE("central zero-noise run reduces to the pure shifts", "[privatizer]") {
    RiverSwimParams params;
    params.reward_kind = RewardKind::deterministic;
    const TabularMdp river = build_riverswim(3, 4, params);
    auto cfg = base_config(PrivatizerKind::central, river, 12);
    cfg.zero_noise = true;
    const double e = privatizer_e_bound(cfg);
    auto privatizer = make_privatizer(cfg);

    CountTables counts(4, 3, 2);
    Rng rng(21);
    const PrivateCounts* pc = nullptr;
    for (int episode = 0; episode < 8; ++episode) {
        const Trajectory traj = sample_episode(river, random_policy(river, rng), rng);
        counts.update_with_trajectory(traj);
        pc = &privatizer->on_episode_end(counts, traj, rng);
    }
    const int S = 3;
    for (int h = 0; h < 4; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < 2; ++a) {
                REQUIRE(pc->visits(h, s, a) ==
                        Catch::Approx(counts.visits(h, s, a) + e / 2.0).margin(1e-6));
                for (int t = 0; t < S; ++t)
                    REQUIRE(pc->visits(h, s, a, t) ==
                            Catch::Approx(counts.visits(h, s, a, t) + e / (2.0 * S))
                                .margin(1e-6));
                REQUIRE(pc->reward_sum(h, s, a) ==
                        Catch::Approx(counts.reward_sum(h, s, a)).margin(1e-9));
            }
}

TEST_CASE("central zero-noise consumes no randomness", "[privatizer]") {
    const TabularMdp river = build_riverswim(3, 4);
    auto cfg = base_config(PrivatizerKind::central, river, 5);
    cfg.zero_noise = true;
    auto privatizer = make_privatizer(cfg);
    CountTables counts(4, 3, 2);
    Rng traj_rng(77);
    const Trajectory traj = sample_episode(river, random_policy(river, traj_rng), traj_rng);
    counts.update_with_trajectory(traj);
    Rng probe(123), replay(123);
    privatizer->on_episode_end(counts, traj, replay);
    REQUIRE(replay.next_u64() == probe.next_u64());
}

TEST_CASE("destination sums match marginals exactly for every kind", "[privatizer]") {
    const TabularMdp river = build_riverswim(4, 6);
    for (PrivatizerKind kind :
         {PrivatizerKind::none, PrivatizerKind::central, PrivatizerKind::local}) {
        auto cfg = base_config(kind, river, 30);
        auto privatizer = make_privatizer(cfg);
        CountTables counts(6, 4, 2);
        Rng rng(314);
        const PrivateCounts* pc = nullptr;
        for (int episode = 0; episode < 30; ++episode) {
            const Trajectory traj = sample_episode(river, random_policy(river, rng), rng);
            counts.update_with_trajectory(traj);
            pc = &privatizer->on_episode_end(counts, traj, rng);
            for (int h = 0; h < 6; ++h)
                for (int s = 0; s < 4; ++s)
                    for (int a = 0; a < 2; ++a) {
                        double dest_sum = 0.0;
                        for (int t = 0; t < 4; ++t) dest_sum += pc->visits(h, s, a, t);
                        REQUIRE(dest_sum == pc->visits(h, s, a));  // bitwise
                    }
        }
    }
}

TEST_CASE("local private counts respect the analytic E empirically", "[privatizer]") {
    const TabularMdp river = build_riverswim(3, 4);
    const int repetitions = 100;
    const std::int64_t episodes = 200;
    auto cfg = base_config(PrivatizerKind::local, river, episodes);
    const double e = privatizer_e_bound(cfg);
    int held = 0;
    for (int rep = 0; rep < repetitions; ++rep) {
        auto privatizer = make_privatizer(cfg);
        CountTables counts(4, 3, 2);
        Rng rng(9000 + rep);
        const PrivateCounts* pc = nullptr;
        bool ok = true;
        for (int episode = 0; episode < episodes; ++episode) {
            const Trajectory traj = sample_episode(river, random_policy(river, rng), rng);
            counts.update_with_trajectory(traj);
            pc = &privatizer->on_episode_end(counts, traj, rng);
            for (int h = 0; h < 4 && ok; ++h)
                for (int s = 0; s < 3 && ok; ++s)
                    for (int a = 0; a < 2; ++a) {
                        if (std::abs(pc->visits(h, s, a) -
                                     static_cast<double>(counts.visits(h, s, a))) > e ||
                            pc->visits(h, s, a) <
                                static_cast<double>(counts.visits(h, s, a)) - 1e-9) {
                            ok = false;
                            break;
                        }
                    }
            if (!ok) break;
        }
        if (ok) ++held;
    }
    REQUIRE(held >= 90);  // 1 - beta of the repetitions
}

TEST_CASE("central noisy marginals are monotone up to release noise", "[privatizer]") {
    const TabularMdp river = build_riverswim(4, 5);
    auto cfg = base_config(PrivatizerKind::central, river, 64);
    auto privatizer = make_privatizer(cfg);
    auto* central = dynamic_cast<CentralPrivatizer*>(privatizer.get());
    REQUIRE(central != nullptr);
    const double slop = 2.0 * bm_error_bound(64, central->eps_prime(), 0.001);

    CountTables counts(5, 4, 2);
    Rng rng(555);
    std::vector<double> prev;
    for (int episode = 0; episode < 64; ++episode) {
        const Trajectory traj = sample_episode(river, random_policy(river, rng), rng);
        counts.update_with_trajectory(traj);
        privatizer->on_episode_end(counts, traj, rng);
        std::vector<double> current;
        for (int h = 0; h < 5; ++h)
            for (int s = 0; s < 4; ++s)
                for (int a = 0; a < 2; ++a) current.push_back(central->noisy_marginal(h, s, a));
        if (!prev.empty())
            for (std::size_t i = 0; i < current.size(); ++i)
                REQUIRE(prev[i] <= current[i] + slop);
        prev = std::move(current);
    }
}

TEST_CASE("per-user privacy budget composes to at most epsilon", "[privatizer]") {
    // One trajectory touches H cells in each of the three stream families,
    // and each touched element sits in at most max_k audit(K, k) tree nodes
    // protected at eps' apiece.
    const TabularMdp river = build_riverswim(3, 4);
    const std::int64_t episodes = 1000;
    auto cfg = base_config(PrivatizerKind::central, river, episodes);
    CentralPrivatizer central(cfg);
    int max_nodes = 0;
    for (std::int64_t k = 1; k <= episodes; ++k)
        max_nodes = std::max(max_nodes, bm_sensitivity_audit(episodes, k));
    const double composed = 3.0 * river.horizon() * max_nodes * central.eps_prime();
    REQUIRE(composed <= cfg.epsilon + 1e-12);
}

TEST_CASE("episode budget K is enforced", "[privatizer]") {
    const TabularMdp river = build_riverswim(3, 4);
    for (PrivatizerKind kind : {PrivatizerKind::central, PrivatizerKind::local}) {
        auto privatizer = make_privatizer(base_config(kind, river, 2));
        CountTables counts(4, 3, 2);
        Rng rng(1);
        for (int episode = 0; episode < 2; ++episode) {
            const Trajectory traj = sample_episode(river, random_policy(river, rng), rng);
            counts.update_with_trajectory(traj);
            privatizer->on_episode_end(counts, traj, rng);
        }
        const Trajectory extra = sample_episode(river, random_policy(river, rng), rng);
        counts.update_with_trajectory(extra);
        REQUIRE_THROWS_AS(privatizer->on_episode_end(counts, extra, rng), std::logic_error);
    }
}

TEST_CASE("override replaces the E consumed by the pipeline", "[privatizer]") {
    RiverSwimParams params;
    params.reward_kind = RewardKind::deterministic;
    const TabularMdp river = build_riverswim(3, 4, params);
    auto cfg = base_config(PrivatizerKind::central, river, 4);
    cfg.zero_noise = true;
    cfg.e_bound_override = 6.0;
    auto privatizer = make_privatizer(cfg);
    REQUIRE(privatizer->e_bound() == 6.0);
    CountTables counts(4, 3, 2);
    Rng rng(3);
    Policy left(4, 3);
    const Trajectory traj = sample_episode(river, left, rng);
    counts.update_with_trajectory(traj);
    const PrivateCounts& pc = privatizer->on_episode_end(counts, traj, rng);
    REQUIRE(pc.e_bound == 6.0);
    REQUIRE(pc.visits(0, 0, 0) == Catch::Approx(1.0 + 3.0).margin(1e-9));
    REQUIRE(pc.visits(0, 0, 0, 0) == Catch::Approx(1.0 + 1.0).margin(1e-9));
}
