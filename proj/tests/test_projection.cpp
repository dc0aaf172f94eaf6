#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dprl/projection.hpp"
#include "dprl/rng.hpp"

using namespace dprl;

namespace {

double solution_sum(const ProjectionSolution& sol) {
    double s = 0.0;
    for (double x : sol.x) s += x;
    return s;
}

void check_constraints(const ProjectionProblem& p, const ProjectionSolution& sol,
                       double tol = 1e-9) {
    double sum = 0.0, max_dev = 0.0;
    for (std::size_t i = 0; i < sol.x.size(); ++i) {
        REQUIRE(sol.x[i] >= 0.0);
        sum += sol.x[i];
        max_dev = std::max(max_dev, std::abs(sol.x[i] - p.noisy_dest[i]));
    }
    const double lo = std::max(0.0, p.noisy_total - p.slack);
    const double hi = std::max(0.0, p.noisy_total + p.slack);
    REQUIRE(sum >= lo - tol);
    REQUIRE(sum <= hi + tol);
    REQUIRE(max_dev == Catch::Approx(sol.t_star).margin(1e-12));
}

ProjectionProblem random_problem(Rng& rng, int max_states = 5) {
    ProjectionProblem p;
    const int S = 1 + static_cast<int>(rng.uniform() * max_states);
    for (int i = 0; i < S; ++i) p.noisy_dest.push_back(-10.0 + 20.0 * rng.uniform());
    p.noisy_total = -10.0 + 20.0 * rng.uniform();
    p.slack = 5.0 * rng.uniform();
    return p;
}

}  // namespace

TEST_CASE("projection examples", "[projection]") {
    SECTION("already consistent input is returned unchanged") {
        const auto sol = project({{3.0, 5.0}, 8.0, 1.0});
        REQUIRE(sol.t_star == 0.0);
        REQUIRE(sol.x == std::vector<double>{3.0, 5.0});
    }

    SECTION("inflated marginal pulls both coordinates up") {
        const ProjectionProblem p{{3.0, 5.0}, 10.0, 1.0};
        const auto sol = project(p);
        REQUIRE(sol.t_star == Catch::Approx(0.5).margin(1e-8));
        REQUIRE(sol.x[0] == Catch::Approx(3.5).margin(1e-8));
        REQUIRE(sol.x[1] == Catch::Approx(5.5).margin(1e-8));
        REQUIRE(solution_sum(sol) == Catch::Approx(9.0).margin(1e-8));
        check_constraints(p, sol);

        const auto oracle = project_oracle(p, 1e-4);
        REQUIRE(std::abs(oracle.t_star - sol.t_star) <= 1e-4);
    }

    SECTION("negative coordinate is clamped by nonnegativity") {
        const ProjectionProblem p{{-1.0, 2.0}, 3.0, 2.0};
        const auto sol = project(p);
        REQUIRE(sol.t_star == Catch::Approx(1.0).margin(1e-8));
        REQUIRE(sol.x[0] == 0.0);
        REQUIRE(sol.x[1] == Catch::Approx(2.0).margin(1e-8));
        check_constraints(p, sol);
    }

    SECTION("zero-deviation cases come back exactly from the oracle") {
        const auto sol = project_oracle({{1.0, 2.0, 3.0}, 6.0, 0.5}, 1e-4);
        REQUIRE(sol.t_star == 0.0);
    }

    SECTION("deeply negative marginal forces the all-zero solution") {
        // The sum constraint interval is clamped at zero; x must vanish.
        const ProjectionProblem p{{4.0, -1.0}, -9.0, 1.0};
        const auto sol = project(p);
        REQUIRE(sol.x[0] == 0.0);
        REQUIRE(sol.x[1] == 0.0);
        REQUIRE(sol.t_star == Catch::Approx(4.0).margin(1e-8));
    }
}

TEST_CASE("projection is deterministic", "[projection]") {
    const ProjectionProblem p{{0.3, -2.0, 7.5}, 4.0, 0.25};
    const auto a = project(p);
    const auto b = project(p);
    REQUIRE(a.x == b.x);
    REQUIRE(a.t_star == b.t_star);
}

TEST_CASE("randomized cross-check against the grid oracle", "[projection]") {
    Rng rng(271828);
    for (int trial = 0; trial < 2000; ++trial) {
        const ProjectionProblem p = random_problem(rng);
        const auto fast = project(p);
        const auto slow = project_oracle(p, 1e-4);
        REQUIRE(std::abs(fast.t_star - slow.t_star) <= 1e-4 + 1e-9);
        check_constraints(p, fast);
    }
}

TEST_CASE("t* is 1-Lipschitz in the destination sup-norm", "[projection]") {
    Rng rng(314159);
    for (int trial = 0; trial < 500; ++trial) {
        const ProjectionProblem p = random_problem(rng);
        ProjectionProblem q = p;
        const double delta = rng.uniform();
        for (auto& d : q.noisy_dest) d += delta * (2.0 * rng.uniform() - 1.0);
        const double t_p = project(p).t_star;
        const double t_q = project(q).t_star;
        REQUIRE(std::abs(t_p - t_q) <= delta + 2e-8);
    }
}

TEST_CASE("finalize applies the never-underestimate shifts", "[projection]") {
    SECTION("worked example") {
        ProjectionSolution sol;
        sol.x = {3.5, 5.5};
        const auto [dest, total] = finalize_counts(sol, 2, 4.0);
        REQUIRE(dest[0] == Catch::Approx(4.5).margin(1e-12));
        REQUIRE(dest[1] == Catch::Approx(6.5).margin(1e-12));
        REQUIRE(total == Catch::Approx(11.0).margin(1e-12));
    }

    SECTION("E = 0 is the identity") {
        ProjectionSolution sol;
        sol.x = {1.0, 0.0, 2.0};
        const auto [dest, total] = finalize_counts(sol, 3, 0.0);
        REQUIRE(dest == sol.x);
        REQUIRE(total == 3.0);
    }

    SECTION("consistency is exact by construction") {
        Rng rng(99);
        for (int trial = 0; trial < 200; ++trial) {
            ProjectionSolution sol;
            const int S = 1 + static_cast<int>(rng.uniform() * 6);
            for (int i = 0; i < S; ++i) sol.x.push_back(10.0 * rng.uniform());
            const double e = 5.0 * rng.uniform();
            const auto [dest, total] = finalize_counts(sol, S, e);
            double sum = 0.0;
            for (double d : dest) sum += d;
            REQUIRE(sum == total);  // bitwise, same summation order
            if (e > 0.0)
                for (double d : dest) REQUIRE(d > 0.0);
        }
    }
}

TEST_CASE("finalized counts satisfy the private-count contract", "[projection]") {
    // Whenever the noisy inputs are within E/4 of the truth, the projected
    // and shifted counts stay within E cellwise, the marginal never
    // underestimates, consistency is exact and everything is positive.
    Rng rng(5150);
    for (int trial = 0; trial < 1000; ++trial) {
        const int S = 1 + static_cast<int>(rng.uniform() * 6);
        std::vector<double> true_dest(S);
        double true_total = 0.0;
        for (int i = 0; i < S; ++i) {
            true_dest[i] = static_cast<double>(static_cast<int>(rng.uniform() * 100));
            true_total += true_dest[i];
        }
        const double e = 0.1 + 20.0 * rng.uniform();
        ProjectionProblem p;
        p.slack = e / 4.0;
        for (int i = 0; i < S; ++i)
            p.noisy_dest.push_back(true_dest[i] + (rng.uniform() - 0.5) * e / 2.0);
        p.noisy_total = true_total + (rng.uniform() - 0.5) * e / 2.0;

        const auto sol = project(p);
        const auto [dest, total] = finalize_counts(sol, S, e);
        double dest_sum = 0.0;
        for (int i = 0; i < S; ++i) {
            REQUIRE(std::abs(dest[i] - true_dest[i]) <= e + 1e-6);
            REQUIRE(dest[i] > 0.0);
            dest_sum += dest[i];
        }
        REQUIRE(dest_sum == total);
        REQUIRE(total >= true_total - 1e-6);
        REQUIRE(total <= true_total + e + 1e-6);
    }
}
