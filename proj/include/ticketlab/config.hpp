#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ticketlab/elastic.hpp"
#include "ticketlab/pruner.hpp"
#include "ticketlab/train.hpp"

namespace ticketlab {

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int line_, const std::string& msg)
        : std::runtime_error("config line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

enum class ExperimentKind {
    train_full,
    imp_layerwise,
    imp_global,
    rg_observables,
    transfer_nlo_to_hh,
    transfer_hh_to_nlo,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from(const std::string& name, int line = 0);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::train_full;
    uint64_t seed = 1;
    std::filesystem::path out;        // empty: resolved from TICKETLAB_OUT or ./runs
    std::filesystem::path input_run;  // rg_observables and transfer kinds
    int parallelism = 2;

    std::string system_name;  // empty: nlo, or per transfer kind
    std::optional<std::vector<double>> initial_state;

    std::vector<int> hidden{50, 50};

    TrainConfig train;  // seed and threads are filled in by the harness

    PruneSchedule prune;
    bool prune_floor_set = false;   // floor default depends on scope
    int prune_layer_1based = 0;     // imp_layerwise: 0 = each layer in turn

    std::vector<double> t_max_sweep;  // transfer kinds; empty = default sweep
    bool carry_source_init = true;
    int ticket_stride = 1;

    bool paper_fidelity = false;  // restores 5e4 epochs

    /// The effective system for this experiment (transfer kinds imply it).
    SystemSpec make_target_system() const;
    ArchSpec make_arch() const;
    void apply_paper_fidelity();
    void validate() const;
};

/// Parses the INI-style experiment config (sections [system], [arch],
/// [train], [prune], [transfer]). Unknown keys and out-of-range values fail
/// with the offending line number. `implied_kind` comes from a CLI
/// subcommand and must agree with an explicit `experiment =` line.
ExperimentConfig parse_config(const std::string& text,
                              std::optional<ExperimentKind> implied_kind = std::nullopt);

/// Canonical dump with every default filled in; what the manifest records
/// and what the config hash covers.
std::string dump_config(const ExperimentConfig& config);

}  // namespace ticketlab
