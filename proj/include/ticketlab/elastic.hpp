#pragma once

#include <set>
#include <vector>

#include "ticketlab/pruner.hpp"

namespace ticketlab {

/// Per-layer action taken when reshaping a ticket between architectures.
/// Output blocks are whole columns of the final layer (one per output
/// coordinate), together with the matching bias entry.
struct BlockMap {
    enum class Action { copy, duplicate_columns, drop_columns };
    struct LayerAction {
        Action action = Action::copy;
        std::vector<int> drop;  // 0-based column indices, drop_columns only
    };
    ArchSpec source;
    ArchSpec target;
    std::vector<LayerAction> layers;
};

/// Widen a 2-output ticket to 4 outputs by duplicating the final layer's
/// column block: columns (a, b) become (a, b, a, b); the final bias pair is
/// duplicated the same way. Hidden layers must match.
Ticket stretch_ticket(const Ticket& ticket, const ArchSpec& target);

/// Narrow a ticket by dropping final-layer output blocks. `drop` holds
/// 1-based output indices; the default {2, 4} removes the second dimension's
/// position and momentum when going 4 -> 2.
Ticket squeeze_ticket(const Ticket& ticket, const ArchSpec& target,
                      const std::set<int>& drop = {2, 4});

/// The map either operation applies; exposed for tests and inspection.
BlockMap stretch_map(const ArchSpec& source, const ArchSpec& target);
BlockMap squeeze_map(const ArchSpec& source, const ArchSpec& target, const std::set<int>& drop);
Ticket apply_block_map(const Ticket& ticket, const BlockMap& map);

struct TransferOptions {
    std::vector<double> t_max_sweep;  // defaults to {2pi, 4pi, 6pi, 8pi}
    bool carry_source_init = true;    // false: fresh init under the transferred mask
    uint64_t fresh_init_seed = 0;     // base seed when carry_source_init is false
    int ticket_stride = 1;            // evaluate every k-th ticket
    int rk4_substeps = 100;
    TrainConfig train;                // grid_points/threads/epochs for target trainings

    TransferOptions();
};

struct TransferPoint {
    int source_iteration = 0;
    double source_density = 0.0;
    double t_max = 0.0;
    double epsilon = 0.0;
    double final_loss = 0.0;
    bool diverged = false;
};

/// Train the target system under each transferred ticket for each
/// integration time in the sweep. Tickets whose architecture differs from
/// the target's are stretched (2 -> 4) or squeezed (4 -> 2, dropping blocks
/// 2 and 4). Deterministic given the options.
std::vector<TransferPoint> transfer_evaluate(std::span<const Ticket> tickets,
                                             const SystemSpec& target,
                                             const TransferOptions& options);

}  // namespace ticketlab
