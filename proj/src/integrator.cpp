#include "ticketlab/integrator.hpp"

#include <cmath>
#include <string>

namespace ticketlab {

std::vector<double> make_grid(double t_max, int points) {
    if (points < 2 || !(t_max > 0.0))
        throw std::invalid_argument("grid needs t_max > 0 and at least 2 points");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        g[static_cast<std::size_t>(i)] = t_max * static_cast<double>(i) / (points - 1);
    return g;
}

namespace {

void rk4_step(const RhsFn& rhs, std::span<double> s, double h, std::vector<double>& k1,
              std::vector<double>& k2, std::vector<double>& k3, std::vector<double>& k4,
              std::vector<double>& tmp) {
    const std::size_t d = s.size();
    rhs(s, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = s[i] + h * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < d; ++i)
        s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace

Trajectory rk4_solve(const RhsFn& rhs, std::vector<double> initial_state,
                     std::span<const double> grid, int substeps) {
    if (substeps < 1) throw std::invalid_argument("rk4_solve: substeps must be >= 1");
    if (grid.empty()) throw std::invalid_argument("rk4_solve: empty grid");
    const std::size_t d = initial_state.size();

    Trajectory traj;
    traj.dim = static_cast<int>(d);
    traj.times.assign(grid.begin(), grid.end());
    traj.states.reserve(grid.size() * d);

    std::vector<double> s = std::move(initial_state);
    std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);

    // The grid is assumed to start at t = 0, where the initial state lives.
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (g > 0) {
            const double h = (grid[g] - grid[g - 1]) / substeps;
            for (int i = 0; i < substeps; ++i) rk4_step(rhs, s, h, k1, k2, k3, k4, tmp);
        }
        for (double v : s) {
            if (!std::isfinite(v))
                throw DivergenceError("rk4_solve diverged near t = " + std::to_string(grid[g]));
            traj.states.push_back(v);
        }
    }
    return traj;
}

Trajectory rk4_solve(const SystemSpec& system, std::span<const double> grid, int substeps) {
    return rk4_solve(
        [&system](std::span<const double> s, std::span<double> out) { system.rhs(s, out); },
        system.initial_state, grid, substeps);
}

double trajectory_error(std::span<const double> states, const Trajectory& ref) {
    if (states.size() != ref.states.size())
        throw ShapeError("trajectory_error: grids do not match");
    const std::size_t d = static_cast<std::size_t>(ref.dim);
    const std::size_t n = ref.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = states[k * d + i] - ref.states[k * d + i];
            sq += diff * diff;
        }
        sum += std::sqrt(sq);
    }
    return sum / static_cast<double>(n);
}

double energy_drift(std::span<const double> states, int dim, const SystemSpec& system) {
    if (states.empty() || dim <= 0 || states.size() % static_cast<std::size_t>(dim) != 0)
        throw ShapeError("energy_drift: empty or misshaped state sequence");
    const std::size_t d = static_cast<std::size_t>(dim);
    const double e0 = system.energy(states.subspan(0, d));
    double drift = 0.0;
    for (std::size_t k = 0; k < states.size() / d; ++k) {
        const double e = system.energy(states.subspan(k * d, d));
        drift = std::max(drift, std::abs(e - e0));
    }
    return drift;
}

double energy_drift(const Trajectory& traj, const SystemSpec& system) {
    return energy_drift(traj.states, traj.dim, system);
}

}  // namespace ticketlab
