#pragma once

#include <optional>
#include <vector>

#include "ticketlab/net.hpp"
#include "ticketlab/systems.hpp"
#include "ticketlab/train.hpp"

namespace ticketlab {

enum class PruneScope { global, single_layer, layerwise_all };

struct PruneSchedule {
    PruneScope scope = PruneScope::global;
    int layer = 0;        // single_layer scope, 0-based
    double rate = 0.05;   // fraction of eligible weights removed per iteration
    double floor_density = 0.05;  // per-layer density at/below which a layer is exempt
    int max_iterations = 400;

    void validate(const ArchSpec& arch) const;
};

/// Default floors: 5% for global scope, 10% when pruning a single layer.
PruneSchedule default_schedule(PruneScope scope, double rate = 0.05, int layer = 0);

struct PruneResult {
    Mask mask;
    std::size_t removed = 0;
    bool empty_scope = false;  // no eligible weights; mask returned unchanged
};

/// Removes the floor(rate * eligible) smallest-|weight| entries among the
/// currently unmasked weights in scope, skipping layers at/below their
/// density floor. Ties break on canonical (layer, row, column) order.
/// The input mask is not modified.
PruneResult magnitude_prune(const NetworkParams& params, const Mask& mask,
                            const PruneSchedule& schedule);

/// True if the layer may no longer be pruned.
bool layer_at_floor(const Mask& mask, int layer, double floor_density);

/// The transferable object: mask plus the initialization it belongs to.
struct Ticket {
    ArchSpec arch;
    uint64_t seed = 0;
    Mask mask;
    std::vector<std::vector<double>> weights_init;
    std::vector<std::vector<double>> biases_init;

    static Ticket from_params(const NetworkParams& params, const Mask& mask);
    /// Network at the ticket's initialization (w_init doubles as the frozen
    /// snapshot of the result).
    NetworkParams materialize() const;
    double density() const { return mask.density(); }
};

struct ImpIteration {
    int iteration = 0;
    double density = 0.0;
    std::vector<double> layer_density;
    std::size_t unmasked = 0;
    double epsilon = 0.0;
    double final_loss = 0.0;
    std::vector<double> layer_mag_fraction;  // M_i(n), trained weights
    Mask mask;
    bool any_layer_at_floor = false;
    bool diverged = false;
};

struct PruneTrace {
    ArchSpec arch;
    uint64_t seed = 0;
    std::string system_name;
    PruneSchedule schedule;
    std::vector<ImpIteration> iterations;
    bool diverged = false;

    Ticket ticket_at(std::size_t iteration, const NetworkParams& init_params) const;
};

/// Full IMP loop: train, record metrics against the RK4 reference, prune,
/// rewind (fresh optimizer), repeat until max iterations, every layer at its
/// floor, or a pruning step removes nothing. Deterministic given the seed.
/// Diverged training truncates the trace with a marker on the last record.
PruneTrace imp_run(const SystemSpec& system, const ArchSpec& arch, const PruneSchedule& schedule,
                   const TrainConfig& config);

/// As imp_run, but also hands each iteration's trained params to `observer`
/// (used by the harness to persist tickets as they appear).
PruneTrace imp_run(const SystemSpec& system, const ArchSpec& arch, const PruneSchedule& schedule,
                   const TrainConfig& config,
                   const std::function<void(const ImpIteration&, const NetworkParams&)>& observer);

}  // namespace ticketlab
