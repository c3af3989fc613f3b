#include "ticketlab/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ticketlab/csv.hpp"
#include "ticketlab/elastic.hpp"
#include "ticketlab/integrator.hpp"
#include "ticketlab/seeding.hpp"
#include "ticketlab/ticket_io.hpp"

namespace ticketlab {

namespace fs = std::filesystem;

uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::filesystem::path resolve_out_dir(const ExperimentConfig& config) {
    if (!config.out.empty()) return config.out;
    const char* root = std::getenv("TICKETLAB_OUT");
    const fs::path base = root ? fs::path(root) : fs::path("runs");
    return base / (to_string(config.kind) + "-seed" + std::to_string(config.seed));
}

namespace {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

struct ArtifactSink {
    fs::path dir;
    std::vector<std::string> names;

    void write(const std::string& rel, std::string_view contents) {
        atomic_write(dir / rel, contents);
        names.push_back(rel);
    }
};

std::string loss_history_csv(const std::vector<double>& history) {
    std::string out;
    csv_row(out, {"epoch", "loss"});
    for (std::size_t e = 0; e < history.size(); ++e)
        csv_row(out, {std::to_string(e), format_double(history[e])});
    return out;
}

std::string trajectory_csv(std::span<const double> grid, std::span<const double> nn,
                           const Trajectory& ref) {
    const int d = ref.dim;
    std::string out;
    std::vector<std::string> header{"t"};
    for (int i = 1; i <= d; ++i) header.push_back("nn_" + std::to_string(i));
    for (int i = 1; i <= d; ++i) header.push_back("ref_" + std::to_string(i));
    csv_row(out, header);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::vector<std::string> row{format_double(grid[k])};
        for (int i = 0; i < d; ++i)
            row.push_back(format_double(nn[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)]));
        for (int i = 0; i < d; ++i)
            row.push_back(format_double(ref.states[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)]));
        csv_row(out, row);
    }
    return out;
}

std::string transfer_csv(std::span<const TransferPoint> points, const std::string& direction) {
    std::string out;
    csv_row(out, {"source_iteration", "source_density", "t_max", "epsilon", "final_loss",
                  "diverged", "direction"});
    for (const TransferPoint& p : points)
        csv_row(out, {std::to_string(p.source_iteration), format_double(p.source_density),
                      format_double(p.t_max), format_double(p.epsilon),
                      format_double(p.final_loss), p.diverged ? "1" : "0", direction});
    return out;
}

void run_train_full(const ExperimentConfig& config, ArtifactSink& sink, bool& diverged) {
    SystemSpec sys = config.make_target_system();
    ArchSpec arch = config.make_arch();
    TrainConfig tc = config.train;
    tc.seed = derive_seed(config.seed, static_cast<uint32_t>(config.kind), 0);
    tc.threads = config.parallelism;

    NetworkParams params = init_params(arch, tc.seed);
    Mask mask = Mask::ones(arch);
    auto grid = make_grid(tc.t_max, tc.grid_points);
    Trajectory ref = rk4_solve(sys, grid, 100);
    ResidualEvaluator evaluator(arch, sys, grid, tc.threads);

    PruneTrace trace;
    trace.arch = arch;
    trace.seed = tc.seed;
    trace.system_name = sys.name;
    ImpIteration rec;
    rec.iteration = 0;
    rec.mask = mask;
    rec.unmasked = mask.unmasked_count();
    rec.density = 1.0;
    for (int l = 0; l < arch.n_layers(); ++l) rec.layer_density.push_back(1.0);

    try {
        TrainResult r = train(params, mask, evaluator, tc);
        params = std::move(r.params);
        rec.final_loss = r.loss_history.empty() ? evaluator.loss(params, mask)
                                                : r.loss_history.back();
        auto nn = evaluator.trajectory(params, mask);
        rec.epsilon = trajectory_error(nn, ref);
        rec.layer_mag_fraction = layer_magnitude_fraction(params, mask);
        sink.write("loss_history.csv", loss_history_csv(r.loss_history));
        sink.write("trajectory.csv", trajectory_csv(grid, nn, ref));
    } catch (const TrainDivergedError&) {
        rec.diverged = true;
        diverged = true;
    }
    trace.iterations.push_back(std::move(rec));

    save_ticket(sink.dir / "tickets" / "iter_000000.tkt",
                Ticket::from_params(params, mask));
    sink.names.push_back("tickets/iter_000000.tkt");

    std::string trace_text;
    write_trace_csv(sink.dir / "trace.csv", trace, {"tickets/iter_000000.tkt"});
    sink.names.push_back("trace.csv");
}

void run_imp(const ExperimentConfig& config, const PruneSchedule& schedule, uint32_t run_index,
             const fs::path& subdir, ArtifactSink& sink, bool& diverged) {
    SystemSpec sys = config.make_target_system();
    ArchSpec arch = config.make_arch();
    TrainConfig tc = config.train;
    tc.seed = derive_seed(config.seed, static_cast<uint32_t>(config.kind), run_index);
    tc.threads = config.parallelism;

    const NetworkParams initial = init_params(arch, tc.seed);
    std::vector<std::string> ticket_files;
    auto observer = [&](const ImpIteration& it, const NetworkParams&) {
        char name[64];
        std::snprintf(name, sizeof(name), "iter_%06d.tkt", it.iteration);
        const fs::path rel = subdir / "tickets" / name;
        save_ticket(sink.dir / rel, Ticket::from_params(initial, it.mask));
        sink.names.push_back(rel.generic_string());
        ticket_files.push_back(fs::path("tickets" / fs::path(name)).generic_string());
    };

    PruneTrace trace = imp_run(sys, arch, schedule, tc, observer);
    diverged |= trace.diverged;
    if (trace.diverged) {
        // the diverged iteration has no trained ticket; reference it anyway
        while (ticket_files.size() < trace.iterations.size()) ticket_files.emplace_back("");
    }
    write_trace_csv(sink.dir / subdir / "trace.csv", trace, ticket_files);
    sink.names.push_back((subdir / "trace.csv").generic_string());
}

void run_transfer(const ExperimentConfig& config, ArtifactSink& sink, bool& diverged) {
    if (config.input_run.empty())
        throw std::invalid_argument("transfer experiments need input_run = <source run dir>");
    SystemSpec target = config.make_target_system();

    const auto files = trace_ticket_files(config.input_run / "trace.csv");
    std::vector<Ticket> tickets;
    for (const auto& rel : files) {
        if (rel.empty()) continue;
        tickets.push_back(load_ticket(config.input_run / rel));
    }
    if (tickets.empty()) throw DataError("source run has no tickets: " + config.input_run.string());

    const int expected_src_dim = config.kind == ExperimentKind::transfer_nlo_to_hh ? 2 : 4;
    if (tickets.front().arch.output_dim != expected_src_dim)
        throw DataError("source run tickets have output dim " +
                        std::to_string(tickets.front().arch.output_dim) + ", expected " +
                        std::to_string(expected_src_dim));

    TransferOptions opt;
    if (!config.t_max_sweep.empty()) opt.t_max_sweep = config.t_max_sweep;
    opt.carry_source_init = config.carry_source_init;
    opt.fresh_init_seed = derive_seed(config.seed, static_cast<uint32_t>(config.kind), 0);
    opt.ticket_stride = config.ticket_stride;
    opt.train = config.train;
    opt.train.threads = config.parallelism;

    auto points = transfer_evaluate(tickets, target, opt);
    for (const auto& p : points) diverged |= p.diverged;
    const std::string direction =
        config.kind == ExperimentKind::transfer_nlo_to_hh ? "nlo_to_hh" : "hh_to_nlo";
    sink.write("transfer.csv", transfer_csv(points, direction));
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path, const PruneTrace& trace,
                     const std::vector<std::string>& ticket_files) {
    const int L = trace.arch.n_layers();
    std::string out;
    std::vector<std::string> header{"iteration", "density", "unmasked"};
    for (int i = 1; i <= L; ++i) header.push_back("layer_density_" + std::to_string(i));
    header.insert(header.end(), {"epsilon", "final_loss"});
    for (int i = 1; i <= L; ++i) header.push_back("M_" + std::to_string(i));
    header.insert(header.end(), {"at_floor", "diverged", "ticket_file"});
    csv_row(out, header);

    for (std::size_t n = 0; n < trace.iterations.size(); ++n) {
        const ImpIteration& it = trace.iterations[n];
        std::vector<std::string> row{std::to_string(it.iteration), format_double(it.density),
                                     std::to_string(it.unmasked)};
        for (double d : it.layer_density) row.push_back(format_double(d));
        row.push_back(format_double(it.epsilon));
        row.push_back(format_double(it.final_loss));
        if (it.layer_mag_fraction.empty())
            for (int i = 0; i < L; ++i) row.push_back("nan");
        else
            for (double m : it.layer_mag_fraction) row.push_back(format_double(m));
        row.push_back(it.any_layer_at_floor ? "1" : "0");
        row.push_back(it.diverged ? "1" : "0");
        row.push_back(n < ticket_files.size() ? ticket_files[n] : "");
        csv_row(out, row);
    }
    atomic_write(path, out);
}

PruneTrace load_trace_csv(const std::filesystem::path& path) {
    const auto rows = parse_csv(read_file(path));
    if (rows.size() < 2) throw DataError("trace has no data rows: " + path.string());
    const auto& header = rows.front();

    auto col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw DataError("trace is missing column '" + name + "': " + path.string());
    };
    int L = 0;
    while (true) {
        bool found = false;
        for (const auto& h : header) found |= h == "M_" + std::to_string(L + 1);
        if (!found) break;
        ++L;
    }
    if (L == 0) throw DataError("trace has no M_i columns: " + path.string());

    const int c_iter = col("iteration"), c_density = col("density"), c_unmasked = col("unmasked");
    const int c_eps = col("epsilon"), c_loss = col("final_loss");
    const int c_floor = col("at_floor"), c_div = col("diverged");
    const int c_m0 = col("M_1");
    const int c_ld0 = col("layer_density_1");

    PruneTrace trace;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        ImpIteration it;
        it.iteration = std::stoi(row[static_cast<std::size_t>(c_iter)]);
        it.density = std::stod(row[static_cast<std::size_t>(c_density)]);
        it.unmasked = static_cast<std::size_t>(std::stoull(row[static_cast<std::size_t>(c_unmasked)]));
        it.epsilon = std::stod(row[static_cast<std::size_t>(c_eps)]);
        it.final_loss = std::stod(row[static_cast<std::size_t>(c_loss)]);
        for (int i = 0; i < L; ++i) {
            it.layer_mag_fraction.push_back(std::stod(row[static_cast<std::size_t>(c_m0 + i)]));
            it.layer_density.push_back(std::stod(row[static_cast<std::size_t>(c_ld0 + i)]));
        }
        it.any_layer_at_floor = row[static_cast<std::size_t>(c_floor)] == "1";
        it.diverged = row[static_cast<std::size_t>(c_div)] == "1";
        trace.diverged |= it.diverged;
        trace.iterations.push_back(std::move(it));
    }
    return trace;
}

std::vector<std::string> trace_ticket_files(const std::filesystem::path& path) {
    const auto rows = parse_csv(read_file(path));
    if (rows.empty()) throw DataError("empty trace: " + path.string());
    int c = -1;
    for (std::size_t i = 0; i < rows.front().size(); ++i)
        if (rows.front()[i] == "ticket_file") c = static_cast<int>(i);
    if (c < 0) throw DataError("trace is missing ticket_file column: " + path.string());
    std::vector<std::string> out;
    for (std::size_t r = 1; r < rows.size(); ++r)
        out.push_back(rows[r].size() > static_cast<std::size_t>(c)
                          ? rows[r][static_cast<std::size_t>(c)]
                          : "");
    return out;
}

std::vector<CurvePoint> trace_curve(const PruneTrace& trace) {
    std::vector<CurvePoint> out;
    for (const auto& it : trace.iterations)
        if (!it.diverged) out.push_back({it.density, it.epsilon});
    return out;
}

RunManifest run(const ExperimentConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    RunManifest manifest;
    manifest.tool_version = std::string(kToolVersion);
    manifest.resolved_config = dump_config(config);
    manifest.config_hash = hex64(fnv1a64(manifest.resolved_config));
    manifest.out_dir = resolve_out_dir(config);

    ArtifactSink sink{manifest.out_dir, {}};
    fs::create_directories(manifest.out_dir);
    bool diverged = false;

    switch (config.kind) {
        case ExperimentKind::train_full:
            run_train_full(config, sink, diverged);
            break;
        case ExperimentKind::imp_global: {
            PruneSchedule s = config.prune;
            s.scope = PruneScope::global;
            run_imp(config, s, 0, "", sink, diverged);
            break;
        }
        case ExperimentKind::imp_layerwise: {
            ArchSpec arch = config.make_arch();
            if (config.prune.scope != PruneScope::single_layer &&
                config.prune.scope != PruneScope::layerwise_all)
                throw std::invalid_argument("imp_layerwise needs scope layer or layerwise_all");
            if (config.prune.scope == PruneScope::layerwise_all) {
                run_imp(config, config.prune, 0, "", sink, diverged);
            } else if (config.prune_layer_1based > 0) {
                run_imp(config, config.prune, static_cast<uint32_t>(config.prune.layer), "",
                        sink, diverged);
            } else {
                for (int l = 0; l < arch.n_layers(); ++l) {
                    PruneSchedule s = config.prune;
                    s.layer = l;
                    run_imp(config, s, static_cast<uint32_t>(l),
                            fs::path("layer_" + std::to_string(l + 1)), sink, diverged);
                }
            }
            break;
        }
        case ExperimentKind::rg_observables: {
            if (config.input_run.empty())
                throw std::invalid_argument("rg_observables needs input_run = <run dir>");
            for (const auto& rel : write_rg_observables(config.input_run, manifest.out_dir))
                sink.names.push_back(rel);
            break;
        }
        case ExperimentKind::transfer_nlo_to_hh:
        case ExperimentKind::transfer_hh_to_nlo:
            run_transfer(config, sink, diverged);
            break;
    }

    sink.write("resolved_config.ini", manifest.resolved_config);
    manifest.diverged = diverged;
    manifest.artifacts = sink.names;

    const auto t1 = std::chrono::steady_clock::now();
    manifest.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();

    nlohmann::json j;
    j["tool_version"] = manifest.tool_version;
    j["config_hash"] = manifest.config_hash;
    j["resolved_config"] = manifest.resolved_config;
    j["artifacts"] = manifest.artifacts;
    j["wall_clock_seconds"] = manifest.wall_clock_seconds;
    j["diverged"] = manifest.diverged;
    atomic_write(manifest.out_dir / "manifest.json", j.dump(2) + "\n");
    return manifest;
}

std::vector<std::string> write_rg_observables(const std::filesystem::path& run_dir,
                                              const std::filesystem::path& out_dir) {
    PruneTrace trace = load_trace_csv(run_dir / "trace.csv");
    FlowObservables obs = flow_observables(trace);

    fs::create_directories(out_dir);
    atomic_write(out_dir / "rgflow.csv", rgflow_csv(trace));

    std::string txt = "sigma exponents (mean over " + std::to_string(obs.prefloor_transitions) +
                      " pre-floor transitions)\n";
    const auto classes = classify_layers(obs.sigma_mean);
    for (std::size_t i = 0; i < obs.sigma_mean.size(); ++i) {
        txt += "sigma_" + std::to_string(i + 1) + " = " + format_double(obs.sigma_mean[i]) +
               "  [" + layer_class_symbol(classes[i]) + "]\n";
    }
    atomic_write(out_dir / "sigma_summary.txt", txt);
    return {"rgflow.csv", "sigma_summary.txt"};
}

FitReport fit_run(const std::filesystem::path& run_dir, std::optional<FitWindow> window,
                  double plateau_tolerance) {
    PruneTrace trace = load_trace_csv(run_dir / "trace.csv");
    auto curve = trace_curve(trace);

    FitReport report;
    report.clamped = clamp_epsilons(curve);
    report.segments = segment_regimes(curve, plateau_tolerance);
    FitWindow w = window ? *window : report.segments.power_window(curve);
    if (!window) {
        const int in_window = report.segments.power_begin <= report.segments.power_end
                                  ? report.segments.power_end - report.segments.power_begin + 1
                                  : 0;
        if (in_window < 3) {  // degenerate segmentation: fit the whole curve
            w.d_min = curve.back().density;
            w.d_max = curve.front().density;
        }
    }
    report.fit = fit_power_law(curve, w);

    std::string pts;
    csv_row(pts, {"density", "epsilon", "regime"});
    for (int i = 0; i < static_cast<int>(curve.size()); ++i) {
        const char* regime = "power";
        if (i >= report.segments.low_begin && i <= report.segments.low_end) regime = "low";
        else if (i >= report.segments.high_begin && i <= report.segments.high_end) regime = "high";
        csv_row(pts, {format_double(curve[static_cast<std::size_t>(i)].density),
                      format_double(curve[static_cast<std::size_t>(i)].epsilon), regime});
    }
    atomic_write(run_dir / "fit_points.csv", pts);

    std::ostringstream txt;
    txt << "power-law fit eps = c * d^-gamma\n"
        << "c      = " << format_double(report.fit.c) << "\n"
        << "gamma  = " << format_double(report.fit.gamma) << "\n"
        << "r2     = " << format_double(report.fit.r2) << "\n"
        << "window = [" << format_double(report.fit.window.d_min) << ", "
        << format_double(report.fit.window.d_max) << "] (" << report.fit.points << " points)\n"
        << "plateau levels: low = " << format_double(report.segments.eps_low)
        << ", high = " << format_double(report.segments.eps_up) << "\n"
        << "segmentation clean = " << (report.segments.clean ? "true" : "false")
        << (report.clamped ? "\nwarning: zero epsilons clamped before log fit" : "") << "\n";
    report.text = txt.str();
    atomic_write(run_dir / "fit_summary.txt", report.text);
    return report;
}

CompareReport compare_runs(const std::filesystem::path& run_a,
                           const std::filesystem::path& run_b) {
    for (const auto& dir : {run_a, run_b})
        if (!fs::exists(dir / "rgflow.csv"))
            throw DataError("run " + dir.string() +
                            " is missing rgflow.csv (run the rgflow command on it first)");

    PruneTrace ta = load_trace_csv(run_a / "trace.csv");
    PruneTrace tb = load_trace_csv(run_b / "trace.csv");
    FlowObservables oa = flow_observables(ta);
    FlowObservables ob = flow_observables(tb);

    CompareReport rep;
    rep.sigma_a = oa.sigma_mean;
    rep.sigma_b = ob.sigma_mean;
    rep.class_a = classify_layers(oa.sigma_mean);
    rep.class_b = classify_layers(ob.sigma_mean);
    rep.sigma_agreement = rep.class_a == rep.class_b;

    auto gamma_of = [](const PruneTrace& t) {
        auto curve = trace_curve(t);
        clamp_epsilons(curve);
        RegimeSegmentation seg = segment_regimes(curve, 1.0);
        FitWindow w = seg.power_window(curve);
        const int in_window =
            seg.power_begin <= seg.power_end ? seg.power_end - seg.power_begin + 1 : 0;
        if (in_window < 3) {
            w.d_min = curve.back().density;
            w.d_max = curve.front().density;
        }
        return fit_power_law(curve, w).gamma;
    };
    rep.gamma_a = gamma_of(ta);
    rep.gamma_b = gamma_of(tb);

    std::ostringstream txt;
    txt << "layer  sigma(A)      class  sigma(B)      class\n";
    for (std::size_t i = 0; i < rep.sigma_a.size(); ++i)
        txt << "  " << (i + 1) << "    " << format_double(rep.sigma_a[i]) << "  ["
            << layer_class_symbol(rep.class_a[i]) << "]    "
            << (i < rep.sigma_b.size() ? format_double(rep.sigma_b[i]) : "-") << "  ["
            << (i < rep.class_b.size() ? layer_class_symbol(rep.class_b[i]) : '?') << "]\n";
    txt << "sign-pattern agreement: " << (rep.sigma_agreement ? "yes" : "NO") << "\n"
        << "gamma(A) = " << format_double(rep.gamma_a)
        << ", gamma(B) = " << format_double(rep.gamma_b) << "\n";
    rep.text = txt.str();
    return rep;
}

}  // namespace ticketlab
