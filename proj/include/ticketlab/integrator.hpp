#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ticketlab/systems.hpp"

namespace ticketlab {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Reference solution sampled on a grid. States are stored flat,
/// row-major: state k occupies [k*dim, (k+1)*dim).
struct Trajectory {
    std::vector<double> times;
    std::vector<double> states;
    int dim = 0;

    std::span<const double> state(std::size_t k) const {
        return std::span<const double>(states).subspan(k * static_cast<std::size_t>(dim),
                                                       static_cast<std::size_t>(dim));
    }
    std::size_t size() const { return times.size(); }
};

/// K equally spaced times on [0, t_max], endpoints included.
std::vector<double> make_grid(double t_max, int points);

/// Classical RK4 from the system's initial state, `substeps` internal steps
/// per grid interval. The error oracle for epsilon.
Trajectory rk4_solve(const SystemSpec& system, std::span<const double> grid, int substeps);

/// Same stepper for an arbitrary autonomous rhs (tests integrate reference
/// problems with known closed forms through the identical code path).
using RhsFn = std::function<void(std::span<const double>, std::span<double>)>;
Trajectory rk4_solve(const RhsFn& rhs, std::vector<double> initial_state,
                     std::span<const double> grid, int substeps);

/// Mean over the grid of the Euclidean norm of the state difference.
double trajectory_error(std::span<const double> states, const Trajectory& ref);

/// Max over the grid of |H(state) - H(state_0)|.
double energy_drift(const Trajectory& traj, const SystemSpec& system);
double energy_drift(std::span<const double> states, int dim, const SystemSpec& system);

}  // namespace ticketlab
