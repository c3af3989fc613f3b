#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ticketlab/harness.hpp"

using namespace ticketlab;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::string out;
    bool paper_fidelity = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (INI)");
    cmd->add_option("--seed", opts.seed, "top-level seed (overrides config)");
    cmd->add_option("--out", opts.out, "output directory (overrides config)");
    cmd->add_flag("--paper-fidelity", opts.paper_fidelity,
                  "full-fidelity schedules (5e4 epochs, uncapped pruning)");
}

ExperimentConfig load_config(const CommonOpts& opts, std::optional<ExperimentKind> implied) {
    const std::string text = opts.config_path.empty() ? "" : read_text(opts.config_path);
    ExperimentConfig cfg = parse_config(text, implied);
    if (opts.seed) cfg.seed = *opts.seed;
    if (!opts.out.empty()) cfg.out = opts.out;
    if (opts.paper_fidelity) {
        cfg.paper_fidelity = true;
        cfg.apply_paper_fidelity();
    }
    return cfg;
}

int execute(const ExperimentConfig& cfg) {
    RunManifest m = run(cfg);
    std::cout << "run complete: " << m.out_dir.string() << " (" << m.artifacts.size()
              << " artifacts, " << m.wall_clock_seconds << " s)\n";
    if (m.diverged) {
        std::cout << "warning: training diverged in at least one run\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lottery-ticket laboratory for Hamiltonian neural network solvers"};
    app.require_subcommand(1);

    CommonOpts train_opts, prune_opts, rg_opts, transfer_opts;
    std::string rg_run, fit_run_dir, cmp_a, cmp_b, transfer_run;
    double fit_wmin = -1.0, fit_wmax = -1.0, fit_tol = 1.0;

    CLI::App* c_train = app.add_subcommand("train", "train the full network once");
    add_common(c_train, train_opts);

    CLI::App* c_prune = app.add_subcommand("prune", "iterative magnitude pruning run");
    add_common(c_prune, prune_opts);

    CLI::App* c_rg = app.add_subcommand("rgflow", "RG-flow observables of an IMP run");
    add_common(c_rg, rg_opts);
    c_rg->add_option("--run", rg_run, "IMP run directory to analyze");

    CLI::App* c_fit = app.add_subcommand("fit", "power-law fit and regime segmentation");
    c_fit->add_option("--run", fit_run_dir, "IMP run directory to fit")->required();
    c_fit->add_option("--window-min", fit_wmin, "fit window lower density bound");
    c_fit->add_option("--window-max", fit_wmax, "fit window upper density bound");
    c_fit->add_option("--tolerance", fit_tol, "plateau tolerance (factor = 1 + tol)");

    CLI::App* c_transfer = app.add_subcommand("transfer", "elastic ticket transfer sweep");
    add_common(c_transfer, transfer_opts);
    c_transfer->add_option("--run", transfer_run, "source IMP run directory");

    CLI::App* c_compare = app.add_subcommand("compare", "universality report for two runs");
    c_compare->add_option("--run-a", cmp_a, "first run directory")->required();
    c_compare->add_option("--run-b", cmp_b, "second run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_train->parsed()) return execute(load_config(train_opts, ExperimentKind::train_full));
        if (c_prune->parsed()) {
            // scope decides between the global and layerwise experiment kinds
            const std::string text =
                prune_opts.config_path.empty() ? "" : read_text(prune_opts.config_path);
            ExperimentConfig probe = parse_config(
                text.find("experiment") != std::string::npos
                    ? text
                    : text + "\nexperiment = imp_global\n");
            const ExperimentKind kind = probe.prune.scope == PruneScope::global
                                            ? ExperimentKind::imp_global
                                            : ExperimentKind::imp_layerwise;
            if (probe.kind != ExperimentKind::imp_global &&
                probe.kind != ExperimentKind::imp_layerwise)
                throw std::runtime_error("prune subcommand needs an imp_* experiment kind");
            ExperimentConfig cfg = load_config(
                prune_opts, text.find("experiment") != std::string::npos ? probe.kind : kind);
            return execute(cfg);
        }
        if (c_rg->parsed()) {
            ExperimentConfig cfg = load_config(rg_opts, ExperimentKind::rg_observables);
            if (!rg_run.empty()) cfg.input_run = rg_run;
            return execute(cfg);
        }
        if (c_fit->parsed()) {
            std::optional<FitWindow> window;
            if (fit_wmin >= 0.0 || fit_wmax >= 0.0) {
                if (fit_wmin < 0.0 || fit_wmax < 0.0)
                    throw std::runtime_error("--window-min and --window-max go together");
                window = FitWindow{fit_wmin, fit_wmax};
            }
            FitReport rep = fit_run(fit_run_dir, window, fit_tol);
            std::cout << rep.text;
            return 0;
        }
        if (c_transfer->parsed()) {
            const std::string text =
                transfer_opts.config_path.empty() ? "" : read_text(transfer_opts.config_path);
            if (text.find("experiment") == std::string::npos)
                throw std::runtime_error(
                    "transfer needs 'experiment = transfer_nlo_to_hh' or transfer_hh_to_nlo "
                    "in the config");
            ExperimentConfig cfg = load_config(transfer_opts, std::nullopt);
            if (cfg.kind != ExperimentKind::transfer_nlo_to_hh &&
                cfg.kind != ExperimentKind::transfer_hh_to_nlo)
                throw std::runtime_error("transfer subcommand needs a transfer_* experiment kind");
            if (!transfer_run.empty()) cfg.input_run = transfer_run;
            return execute(cfg);
        }
        if (c_compare->parsed()) {
            CompareReport rep = compare_runs(cmp_a, cmp_b);
            std::cout << rep.text;
            return rep.sigma_agreement ? 0 : 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
