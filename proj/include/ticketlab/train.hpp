#pragma once

#include <string>
#include <vector>

#include "ticketlab/evaluator.hpp"
#include "ticketlab/net.hpp"
#include "ticketlab/systems.hpp"

namespace ticketlab {

struct TrainDivergedError : std::runtime_error {
    int epoch;
    explicit TrainDivergedError(int epoch_)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch_)),
          epoch(epoch_) {}
};

enum class GradEngine { fused, tape };
enum class LrSchedule { constant, cosine };

struct TrainConfig {
    int epochs = 20000;
    double learning_rate = 8e-3;  // peak rate
    // Cosine decay from learning_rate to lr_min over the run. A constant
    // 8e-3 leaves Adam oscillating around loss ~1e-3 forever; the decay is
    // what lets the residual floor reach trajectory-level accuracy.
    LrSchedule lr_schedule = LrSchedule::cosine;
    double lr_min = 0.0;
    int grid_points = 200;
    double t_max = 4.0 * 3.14159265358979323846;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double adam_epsilon = 1e-8;
    uint64_t seed = 0;
    int threads = 1;
    // The fused engine computes the identical gradient at a fraction of the
    // cost of replaying the tape; both stay available and tests pin their
    // agreement.
    GradEngine engine = GradEngine::fused;

    void validate() const;
};

struct TrainResult {
    NetworkParams params;
    std::vector<double> loss_history;  // one entry per epoch, loss before the update
};

/// Full-batch Adam on the residual loss. The gradient is multiplied by the
/// mask before the moment update and the step is masked again afterwards, so
/// pruned weights never move. Biases are trained, never masked. Optimizer
/// state starts at zero; rewound runs construct a fresh optimizer.
TrainResult train(const NetworkParams& params, const Mask& mask, const SystemSpec& system,
                  const TrainConfig& config);

/// Same, reusing a caller-owned evaluator (grid and threads come from it).
TrainResult train(const NetworkParams& params, const Mask& mask,
                  const ResidualEvaluator& evaluator, const TrainConfig& config);

}  // namespace ticketlab
