#include "ticketlab/elastic.hpp"

#include <cmath>

#include "ticketlab/integrator.hpp"
#include "ticketlab/seeding.hpp"

namespace ticketlab {

namespace {

void check_hidden_match(const ArchSpec& a, const ArchSpec& b) {
    if (a.hidden != b.hidden)
        throw ShapeError("elastic: hidden layer widths must match between architectures");
}

}  // namespace

BlockMap stretch_map(const ArchSpec& source, const ArchSpec& target) {
    check_hidden_match(source, target);
    if (source.output_dim != 2 || target.output_dim != 4)
        throw ShapeError("stretch: expected 2 -> 4 output widening");
    BlockMap map;
    map.source = source;
    map.target = target;
    for (int l = 0; l + 1 < source.n_layers(); ++l) map.layers.push_back({});
    map.layers.push_back({BlockMap::Action::duplicate_columns, {}});
    return map;
}

BlockMap squeeze_map(const ArchSpec& source, const ArchSpec& target, const std::set<int>& drop) {
    check_hidden_match(source, target);
    BlockMap map;
    map.source = source;
    map.target = target;
    std::vector<int> drop0;
    for (int d : drop) {
        if (d < 1 || d > source.output_dim)
            throw ShapeError("squeeze: drop index out of range");
        drop0.push_back(d - 1);
    }
    if (source.output_dim - static_cast<int>(drop0.size()) != target.output_dim)
        throw ShapeError("squeeze: dropped blocks do not produce the target output width");
    for (int l = 0; l + 1 < source.n_layers(); ++l) map.layers.push_back({});
    map.layers.push_back({BlockMap::Action::drop_columns, drop0});
    return map;
}

Ticket apply_block_map(const Ticket& ticket, const BlockMap& map) {
    if (ticket.arch != map.source) throw ShapeError("apply_block_map: ticket arch mismatch");
    Ticket out;
    out.arch = map.target;
    out.seed = ticket.seed;
    out.mask.layers.resize(static_cast<std::size_t>(map.target.n_layers()));
    out.weights_init.resize(static_cast<std::size_t>(map.target.n_layers()));
    out.biases_init.resize(static_cast<std::size_t>(map.target.n_layers()));

    for (int l = 0; l < map.source.n_layers(); ++l) {
        const auto& action = map.layers[static_cast<std::size_t>(l)];
        const int rows = map.source.layer_rows(l);
        const int cols = map.source.layer_cols(l);
        const auto& m = ticket.mask.layers[static_cast<std::size_t>(l)];
        const auto& w = ticket.weights_init[static_cast<std::size_t>(l)];
        const auto& b = ticket.biases_init[static_cast<std::size_t>(l)];

        switch (action.action) {
            case BlockMap::Action::copy:
                out.mask.layers[static_cast<std::size_t>(l)] = m;
                out.weights_init[static_cast<std::size_t>(l)] = w;
                out.biases_init[static_cast<std::size_t>(l)] = b;
                break;
            case BlockMap::Action::duplicate_columns: {
                const int tcols = map.target.layer_cols(l);
                if (tcols != 2 * cols)
                    throw ShapeError("duplicate_columns: target must double the block");
                std::vector<uint8_t> tm(static_cast<std::size_t>(rows * tcols));
                std::vector<double> tw(static_cast<std::size_t>(rows * tcols));
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < tcols; ++c) {
                        tm[static_cast<std::size_t>(r * tcols + c)] =
                            m[static_cast<std::size_t>(r * cols + c % cols)];
                        tw[static_cast<std::size_t>(r * tcols + c)] =
                            w[static_cast<std::size_t>(r * cols + c % cols)];
                    }
                std::vector<double> tb(static_cast<std::size_t>(tcols));
                for (int c = 0; c < tcols; ++c)
                    tb[static_cast<std::size_t>(c)] = b[static_cast<std::size_t>(c % cols)];
                out.mask.layers[static_cast<std::size_t>(l)] = std::move(tm);
                out.weights_init[static_cast<std::size_t>(l)] = std::move(tw);
                out.biases_init[static_cast<std::size_t>(l)] = std::move(tb);
                break;
            }
            case BlockMap::Action::drop_columns: {
                std::vector<int> keep;
                for (int c = 0; c < cols; ++c) {
                    bool dropped = false;
                    for (int d : action.drop) dropped |= d == c;
                    if (!dropped) keep.push_back(c);
                }
                const int tcols = static_cast<int>(keep.size());
                if (tcols != map.target.layer_cols(l))
                    throw ShapeError("drop_columns: kept blocks do not match target");
                std::vector<uint8_t> tm(static_cast<std::size_t>(rows * tcols));
                std::vector<double> tw(static_cast<std::size_t>(rows * tcols));
                std::vector<double> tb(static_cast<std::size_t>(tcols));
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < tcols; ++c) {
                        tm[static_cast<std::size_t>(r * tcols + c)] =
                            m[static_cast<std::size_t>(r * cols + keep[static_cast<std::size_t>(c)])];
                        tw[static_cast<std::size_t>(r * tcols + c)] =
                            w[static_cast<std::size_t>(r * cols + keep[static_cast<std::size_t>(c)])];
                    }
                for (int c = 0; c < tcols; ++c)
                    tb[static_cast<std::size_t>(c)] = b[static_cast<std::size_t>(keep[static_cast<std::size_t>(c)])];
                out.mask.layers[static_cast<std::size_t>(l)] = std::move(tm);
                out.weights_init[static_cast<std::size_t>(l)] = std::move(tw);
                out.biases_init[static_cast<std::size_t>(l)] = std::move(tb);
                break;
            }
        }
    }
    return out;
}

Ticket stretch_ticket(const Ticket& ticket, const ArchSpec& target) {
    return apply_block_map(ticket, stretch_map(ticket.arch, target));
}

Ticket squeeze_ticket(const Ticket& ticket, const ArchSpec& target, const std::set<int>& drop) {
    return apply_block_map(ticket, squeeze_map(ticket.arch, target, drop));
}

TransferOptions::TransferOptions() {
    const double pi = 3.14159265358979323846;
    t_max_sweep = {2 * pi, 4 * pi, 6 * pi, 8 * pi};
}

std::vector<TransferPoint> transfer_evaluate(std::span<const Ticket> tickets,
                                             const SystemSpec& target,
                                             const TransferOptions& options) {
    if (tickets.empty()) throw std::invalid_argument("transfer_evaluate: no tickets");
    if (options.ticket_stride < 1)
        throw std::invalid_argument("transfer_evaluate: stride must be >= 1");
    if (options.t_max_sweep.empty())
        throw std::invalid_argument("transfer_evaluate: empty t_max sweep");

    ArchSpec target_arch = tickets.front().arch;
    target_arch.output_dim = target.dim;

    std::vector<TransferPoint> out;
    for (double t_max : options.t_max_sweep) {
        TrainConfig cfg = options.train;
        cfg.t_max = t_max;
        auto grid = make_grid(t_max, cfg.grid_points);
        Trajectory ref = rk4_solve(target, grid, options.rk4_substeps);
        ResidualEvaluator evaluator(target_arch, target, grid, cfg.threads);

        for (std::size_t k = 0; k < tickets.size(); k += static_cast<std::size_t>(options.ticket_stride)) {
            const Ticket& src = tickets[k];
            Ticket fitted = src.arch.output_dim == target.dim ? src
                            : src.arch.output_dim < target.dim
                                ? stretch_ticket(src, target_arch)
                                : squeeze_ticket(src, target_arch);
            NetworkParams params =
                options.carry_source_init
                    ? fitted.materialize()
                    : init_params(target_arch,
                                  derive_seed(options.fresh_init_seed, 7, static_cast<uint32_t>(k)));

            TransferPoint pt;
            pt.source_iteration = static_cast<int>(k);
            pt.source_density = src.density();
            pt.t_max = t_max;
            try {
                TrainResult r = train(params, fitted.mask, evaluator, cfg);
                pt.final_loss = r.loss_history.empty()
                                    ? evaluator.loss(r.params, fitted.mask)
                                    : r.loss_history.back();
                pt.epsilon = trajectory_error(evaluator.trajectory(r.params, fitted.mask), ref);
            } catch (const TrainDivergedError&) {
                pt.diverged = true;
            }
            out.push_back(pt);
        }
    }
    return out;
}

}  // namespace ticketlab
