#include <cmath>

#include "doctest.h"
#include "ticketlab/integrator.hpp"

using namespace ticketlab;

namespace {

// x'' = -x as a first-order system; analytic solution cos(t), -sin(t).
void linear_rhs(std::span<const double> s, std::span<double> out) {
    out[0] = s[1];
    out[1] = -s[0];
}

}  // namespace

TEST_CASE("make_grid spans [0, t_max] inclusively") {
    auto g = make_grid(2.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 2.0);
    CHECK(g[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(make_grid(0.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 1), std::invalid_argument);
}

TEST_CASE("rk4 on the NLO fixed point stays exactly at zero") {
    SystemSpec nlo = make_nlo({0.0, 0.0});
    auto grid = make_grid(4.0 * M_PI, 50);
    Trajectory traj = rk4_solve(nlo, grid, 10);
    for (double v : traj.states) CHECK(v == 0.0);
}

TEST_CASE("rk4 matches the analytic cosine on the linearized oscillator") {
    auto grid = make_grid(4.0 * M_PI, 200);
    Trajectory traj = rk4_solve(linear_rhs, {1.0, 0.0}, grid, 100);
    double max_err = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        max_err = std::max(max_err, std::abs(traj.states[k * 2] - std::cos(grid[k])));
        max_err = std::max(max_err, std::abs(traj.states[k * 2 + 1] + std::sin(grid[k])));
    }
    CHECK(max_err < 1e-6);
    // x(2pi) back to 1 in particular
    const std::size_t half = grid.size() / 2;
    CHECK(std::abs(traj.states[half * 2] - std::cos(grid[half])) < 1e-6);
}

TEST_CASE("halving the step cuts the cosine error by ~16x (4th order)") {
    auto grid = make_grid(2.0 * M_PI, 9);
    auto max_err = [&](int substeps) {
        Trajectory t = rk4_solve(linear_rhs, {1.0, 0.0}, grid, substeps);
        double m = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k)
            m = std::max(m, std::abs(t.states[k * 2] - std::cos(grid[k])));
        return m;
    };
    const double ratio = max_err(4) / max_err(8);
    CHECK(std::log2(ratio) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("rk4 4th-order convergence holds on the nonlinear system too") {
    SystemSpec nlo = make_nlo({1.3, 1.0});
    auto grid = make_grid(2.0 * M_PI, 17);
    Trajectory fine = rk4_solve(nlo, grid, 512);
    auto max_err = [&](int substeps) {
        Trajectory t = rk4_solve(nlo, grid, substeps);
        double m = 0.0;
        for (std::size_t i = 0; i < t.states.size(); ++i)
            m = std::max(m, std::abs(t.states[i] - fine.states[i]));
        return m;
    };
    const double order = std::log2(max_err(4) / max_err(8));
    CHECK(order == doctest::Approx(4.0).epsilon(0.08));
}

TEST_CASE("trajectory_error basics") {
    SystemSpec nlo = make_nlo({1.0, 0.5});
    auto grid = make_grid(3.0, 7);
    Trajectory ref = rk4_solve(nlo, grid, 20);

    SUBCASE("identical trajectories give zero") {
        CHECK(trajectory_error(ref.states, ref) == 0.0);
    }
    SUBCASE("constant offset in one coordinate gives that offset") {
        auto shifted = ref.states;
        for (std::size_t k = 0; k < ref.size(); ++k) shifted[k * 2] += 0.25;
        CHECK(trajectory_error(shifted, ref) == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("grid mismatch is a structural error") {
        std::vector<double> wrong(ref.states.size() + 2, 0.0);
        CHECK_THROWS_AS(trajectory_error(wrong, ref), ShapeError);
    }
    SUBCASE("metric properties on sampled trajectories") {
        auto a = ref.states;
        auto b = ref.states;
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] += (i % 3 == 0) ? 0.1 : -0.05;
            b[i] += (i % 2 == 0) ? -0.2 : 0.15;
        }
        Trajectory ta = ref, tb = ref;
        ta.states = a;
        tb.states = b;
        CHECK(trajectory_error(a, tb) == doctest::Approx(trajectory_error(b, ta)).epsilon(1e-12));
        CHECK(trajectory_error(a, tb) <=
              trajectory_error(a, ref) + trajectory_error(b, ref) + 1e-12);
    }
}

TEST_CASE("energy_drift basics") {
    SystemSpec nlo = make_nlo({0.7, -0.2});
    auto grid = make_grid(2.0, 5);

    SUBCASE("fine rk4 drifts below 1e-8") {
        Trajectory traj = rk4_solve(nlo, make_grid(4.0 * M_PI, 100), 100);
        CHECK(energy_drift(traj, nlo) < 1e-8);
    }
    SUBCASE("constant trajectory at a fixed point drifts zero") {
        Trajectory fixed;
        fixed.dim = 2;
        fixed.times = grid;
        fixed.states.assign(grid.size() * 2, 0.0);
        SystemSpec sys = make_nlo({0.0, 0.0});
        CHECK(energy_drift(fixed, sys) == 0.0);
    }
    SUBCASE("one corrupted state dominates the drift") {
        Trajectory traj = rk4_solve(nlo, grid, 50);
        Trajectory bad = traj;
        bad.states[4] += 0.5;
        std::vector<double> s{bad.states[4], bad.states[5]};
        const double expected =
            std::abs(nlo.energy(s) - nlo.energy(std::vector<double>{0.7, -0.2}));
        CHECK(energy_drift(bad, nlo) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("HH default initial condition stays bounded with energy below 1/6") {
    SystemSpec hh = make_hh();
    CHECK(hh.energy(hh.initial_state) < 1.0 / 6.0);
    auto grid = make_grid(8.0 * M_PI, 200);
    Trajectory traj = rk4_solve(hh, grid, 100);
    CHECK(energy_drift(traj, hh) < 1e-8);
    for (double v : traj.states) CHECK(std::abs(v) < 1.5);
}
