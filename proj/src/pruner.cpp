#include "ticketlab/pruner.hpp"

#include <algorithm>
#include <cmath>

#include "ticketlab/integrator.hpp"
#include "ticketlab/rgflow.hpp"

namespace ticketlab {

void PruneSchedule::validate(const ArchSpec& arch) const {
    if (!(rate > 0.0 && rate < 1.0)) throw std::invalid_argument("prune rate must lie in (0, 1)");
    if (!(floor_density > 0.0 && floor_density < 1.0))
        throw std::invalid_argument("floor density must lie in (0, 1)");
    if (max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
    if (scope == PruneScope::single_layer && (layer < 0 || layer >= arch.n_layers()))
        throw std::invalid_argument("single_layer scope: layer index out of range");
}

PruneSchedule default_schedule(PruneScope scope, double rate, int layer) {
    PruneSchedule s;
    s.scope = scope;
    s.rate = rate;
    s.layer = layer;
    s.floor_density = scope == PruneScope::global ? 0.05 : 0.10;
    return s;
}

bool layer_at_floor(const Mask& mask, int layer, double floor_density) {
    const auto& m = mask.layers[static_cast<std::size_t>(layer)];
    const auto threshold = static_cast<std::size_t>(
        std::floor(floor_density * static_cast<double>(m.size()) + 1e-9));
    return mask.unmasked_count_layer(layer) <= threshold;
}

namespace {

struct Candidate {
    double magnitude;
    int layer;
    int index;  // row-major within layer; canonical order with layer
};

}  // namespace

PruneResult magnitude_prune(const NetworkParams& params, const Mask& mask,
                            const PruneSchedule& schedule) {
    schedule.validate(params.arch);
    if (!mask.conforms(params.arch)) throw ShapeError("magnitude_prune: mask mismatch");

    const int L = params.arch.n_layers();
    std::vector<Candidate> eligible;
    for (int l = 0; l < L; ++l) {
        if (schedule.scope == PruneScope::single_layer && l != schedule.layer) continue;
        if (layer_at_floor(mask, l, schedule.floor_density)) continue;
        const auto& w = params.weights[static_cast<std::size_t>(l)];
        const auto& m = mask.layers[static_cast<std::size_t>(l)];
        for (std::size_t k = 0; k < w.size(); ++k)
            if (m[k]) eligible.push_back({std::abs(w[k]), l, static_cast<int>(k)});
    }

    PruneResult result{mask, 0, false};
    if (eligible.empty()) {
        result.empty_scope = true;
        return result;
    }

    auto canonical_less = [](const Candidate& a, const Candidate& b) {
        if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
        if (a.layer != b.layer) return a.layer < b.layer;
        return a.index < b.index;
    };

    if (schedule.scope == PruneScope::layerwise_all) {
        // Independent per-layer quota, same rule as global within each layer.
        std::size_t begin = 0;
        std::sort(eligible.begin(), eligible.end(), [](const Candidate& a, const Candidate& b) {
            return a.layer < b.layer;
        });
        while (begin < eligible.size()) {
            std::size_t end = begin;
            while (end < eligible.size() && eligible[end].layer == eligible[begin].layer) ++end;
            const auto count = static_cast<std::size_t>(
                std::floor(schedule.rate * static_cast<double>(end - begin)));
            std::sort(eligible.begin() + static_cast<std::ptrdiff_t>(begin),
                      eligible.begin() + static_cast<std::ptrdiff_t>(end), canonical_less);
            for (std::size_t k = begin; k < begin + count; ++k) {
                const Candidate& c = eligible[k];
                result.mask.layers[static_cast<std::size_t>(c.layer)]
                                  [static_cast<std::size_t>(c.index)] = 0;
                ++result.removed;
            }
            begin = end;
        }
        return result;
    }

    const auto count =
        static_cast<std::size_t>(std::floor(schedule.rate * static_cast<double>(eligible.size())));
    std::sort(eligible.begin(), eligible.end(), canonical_less);
    for (std::size_t k = 0; k < count; ++k) {
        const Candidate& c = eligible[k];
        result.mask.layers[static_cast<std::size_t>(c.layer)][static_cast<std::size_t>(c.index)] =
            0;
        ++result.removed;
    }
    return result;
}

Ticket Ticket::from_params(const NetworkParams& params, const Mask& mask) {
    if (!mask.conforms(params.arch)) throw ShapeError("Ticket: mask mismatch");
    Ticket t;
    t.arch = params.arch;
    t.seed = params.seed;
    t.mask = mask;
    t.weights_init = params.weights_init;
    t.biases_init = params.biases_init;
    return t;
}

NetworkParams Ticket::materialize() const {
    NetworkParams p;
    p.arch = arch;
    p.seed = seed;
    p.weights = weights_init;
    p.biases = biases_init;
    p.weights_init = weights_init;
    p.biases_init = biases_init;
    return p;
}

Ticket PruneTrace::ticket_at(std::size_t iteration, const NetworkParams& initial) const {
    return Ticket::from_params(initial, iterations.at(iteration).mask);
}

PruneTrace imp_run(const SystemSpec& system, const ArchSpec& arch, const PruneSchedule& schedule,
                   const TrainConfig& config) {
    return imp_run(system, arch, schedule, config, {});
}

PruneTrace imp_run(
    const SystemSpec& system, const ArchSpec& arch, const PruneSchedule& schedule,
    const TrainConfig& config,
    const std::function<void(const ImpIteration&, const NetworkParams&)>& observer) {
    schedule.validate(arch);
    config.validate();

    PruneTrace trace;
    trace.arch = arch;
    trace.seed = config.seed;
    trace.system_name = system.name;
    trace.schedule = schedule;

    NetworkParams params = init_params(arch, config.seed);
    Mask mask = Mask::ones(arch);
    auto grid = make_grid(config.t_max, config.grid_points);
    Trajectory ref = rk4_solve(system, grid, 100);
    ResidualEvaluator evaluator(arch, system, grid, config.threads);

    const int L = arch.n_layers();
    for (int n = 0;; ++n) {
        ImpIteration rec;
        rec.iteration = n;
        rec.mask = mask;
        rec.unmasked = mask.unmasked_count();
        rec.density = mask.density();
        for (int l = 0; l < L; ++l) rec.layer_density.push_back(mask.layer_density(l));
        for (int l = 0; l < L; ++l)
            rec.any_layer_at_floor |= layer_at_floor(mask, l, schedule.floor_density);

        try {
            TrainResult r = train(params, mask, evaluator, config);
            params = std::move(r.params);
            rec.final_loss = r.loss_history.empty() ? evaluator.loss(params, mask)
                                                    : r.loss_history.back();
            rec.epsilon = trajectory_error(evaluator.trajectory(params, mask), ref);
            rec.layer_mag_fraction = layer_magnitude_fraction(params, mask);
        } catch (const TrainDivergedError&) {
            rec.diverged = true;
            trace.diverged = true;
            trace.iterations.push_back(std::move(rec));
            break;
        }
        trace.iterations.push_back(rec);
        if (observer) observer(trace.iterations.back(), params);

        if (n >= schedule.max_iterations) break;
        PruneResult pruned = magnitude_prune(params, mask, schedule);
        if (pruned.empty_scope || pruned.removed == 0) break;
        mask = std::move(pruned.mask);
        params.rewind();
    }
    return trace;
}

}  // namespace ticketlab
