#pragma once

#include <span>
#include <string>
#include <vector>

#include "ticketlab/net.hpp"
#include "ticketlab/tape.hpp"

namespace ticketlab {

enum class SystemId { nlo, hh };

/// A Hamiltonian system: phase-space dimension, Hamilton's-equation right-
/// hand side, energy, and the residual builder used by the tape-based loss.
/// rhs and the residuals encode the same equations; a test cross-checks them.
struct SystemSpec {
    SystemId id = SystemId::nlo;
    std::string name;
    int dim = 2;
    std::vector<double> initial_state;

    /// ds/dt from Hamilton's equations.
    void rhs(std::span<const double> state, std::span<double> out) const;
    /// Row-major dim x dim Jacobian of rhs.
    void rhs_jacobian(std::span<const double> state, std::span<double> out) const;
    /// The Hamiltonian (total energy).
    double energy(std::span<const double> state) const;
    /// Residuals of Hamilton's equations on the tape; dots are forward
    /// tangents of the state estimate nodes.
    std::vector<Var> residuals(Tape& tape, std::span<const Var> xhat) const;
};

/// Nonlinear oscillator, H = p^2/2 + x^2/2 + x^4/4.
SystemSpec make_nlo(std::vector<double> initial_state = {1.3, 1.0});
/// Henon-Heiles, H = (px^2+py^2)/2 + (x^2+y^2)/2 + x^2 y - y^3/3.
SystemSpec make_hh(std::vector<double> initial_state = {0.3, -0.3, 0.3, 0.15});

SystemSpec make_system(SystemId id);
SystemSpec make_system_named(const std::string& name);

}  // namespace ticketlab
