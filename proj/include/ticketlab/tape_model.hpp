#pragma once

#include <span>
#include <vector>

#include "ticketlab/net.hpp"
#include "ticketlab/systems.hpp"
#include "ticketlab/tape.hpp"

namespace ticketlab {

/// Network lifted onto a tape: parameters are registered once, in canonical
/// order, and masked weights are multiplied by their 0/1 mask constant so a
/// pruned weight's gradient is identically zero. The same lifted parameters
/// serve every grid point on the tape.
class TapeNet {
public:
    TapeNet(Tape& tape, const NetworkParams& params, const Mask& mask);

    /// Raw network outputs N(t): sin hidden layers, linear output.
    std::vector<Var> forward(Var t) const;

    const ArchSpec& arch() const { return arch_; }

private:
    Tape* tape_;
    ArchSpec arch_;
    std::vector<std::vector<Var>> masked_weights_;  // per layer, row-major
    std::vector<std::vector<Var>> biases_;
};

/// x_hat(t) = initial_state + (1 - e^(-t)) * raw, componentwise; satisfies
/// x_hat(0) = initial_state exactly for all parameter values.
std::vector<Var> apply_ansatz(std::span<const Var> raw, Var t,
                              std::span<const double> initial_state);

/// Mean over the grid of the summed squared Hamilton's-equation residuals,
/// built entirely on `tape`. Parameters are registered in canonical order,
/// so Tape::reverse on the returned node yields a canonical GradientVector.
Var residual_loss(Tape& tape, const NetworkParams& params, const Mask& mask,
                  const SystemSpec& system, std::span<const double> grid);

}  // namespace ticketlab
