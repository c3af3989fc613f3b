#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "ticketlab/harness.hpp"
#include "ticketlab/ticket_io.hpp"

using namespace ticketlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("tl_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// tiny but complete experiment configs so harness runs stay fast
const char* kTinyTrain = R"(
experiment = train_full
seed = 5
parallelism = 1
[system]
name = nlo
t_max = 1.5
[arch]
hidden = 6 6
[train]
epochs = 12
grid_points = 10
)";

const char* kTinyImp = R"(
experiment = imp_global
seed = 5
parallelism = 1
[system]
name = nlo
t_max = 1.5
[arch]
hidden = 8 8
[train]
epochs = 8
grid_points = 10
[prune]
rate = 0.2
floor = 0.05
max_iterations = 6
)";

}  // namespace

TEST_CASE("config parsing: defaults, errors, and line numbers") {
    SUBCASE("empty config with implied kind fills documented defaults") {
        ExperimentConfig cfg = parse_config("", ExperimentKind::train_full);
        CHECK(cfg.kind == ExperimentKind::train_full);
        CHECK(cfg.seed == 1);
        CHECK(cfg.train.epochs == 20000);
        CHECK(cfg.train.learning_rate == 8e-3);
        CHECK(cfg.train.grid_points == 200);
        CHECK(cfg.train.t_max == doctest::Approx(4.0 * 3.14159265358979));
        CHECK(cfg.hidden == std::vector<int>{50, 50});
        CHECK(cfg.prune.rate == 0.05);
        CHECK(cfg.prune.floor_density == 0.05);
        CHECK(cfg.make_target_system().name == "nlo");
    }
    SUBCASE("floor default follows the scope") {
        ExperimentConfig cfg =
            parse_config("experiment = imp_layerwise\n[prune]\nscope = layer\nlayer = 2\n");
        CHECK(cfg.prune.floor_density == 0.10);
        CHECK(cfg.prune.layer == 1);  // 0-based
    }
    SUBCASE("out-of-range rate reports the line") {
        try {
            parse_config("experiment = imp_global\n[prune]\nrate = 1.5\n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line == 3);
            CHECK(std::string(e.what()).find("out of range") != std::string::npos);
        }
    }
    SUBCASE("unknown keys are rejected with their line") {
        try {
            parse_config("experiment = train_full\nbogus = 1\n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("unknown section and malformed lines") {
        CHECK_THROWS_AS(parse_config("experiment = train_full\n[wat]\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("experiment = train_full\nnoequals\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("experiment = nope\n"), ConfigError);
    }
    SUBCASE("subcommand kind conflicts with an explicit experiment line") {
        CHECK_THROWS_AS(parse_config("experiment = imp_global\n", ExperimentKind::train_full),
                        ConfigError);
    }
    SUBCASE("5% global schedule matches the headline experiment") {
        ExperimentConfig cfg =
            parse_config("experiment = imp_global\n[system]\nname = nlo\n[prune]\nrate = 0.05\n");
        CHECK(cfg.prune.scope == PruneScope::global);
        CHECK(cfg.prune.rate == 0.05);
        CHECK(cfg.prune.floor_density == 0.05);
    }
    SUBCASE("paper fidelity restores 5e4 epochs") {
        ExperimentConfig cfg = parse_config("experiment = train_full\npaper_fidelity = true\n");
        CHECK(cfg.train.epochs == 50000);
    }
    SUBCASE("comments and blank lines are fine") {
        ExperimentConfig cfg = parse_config(
            "# comment\nexperiment = train_full\n\n[train]\nepochs = 7 # inline\n");
        CHECK(cfg.train.epochs == 7);
    }
}

TEST_CASE("dump_config captures every effective value and hashes stably") {
    ExperimentConfig cfg = parse_config(kTinyTrain);
    const std::string a = dump_config(cfg);
    const std::string b = dump_config(parse_config(kTinyTrain));
    CHECK(a == b);
    CHECK(fnv1a64(a) == fnv1a64(b));
    CHECK(a.find("epochs = 12") != std::string::npos);
    CHECK(a.find("beta2 = 0.99") != std::string::npos);  // defaults recorded explicitly
    CHECK(a.find("initial_state = 1.3 1") != std::string::npos);
}

TEST_CASE("train_full run writes the documented artifacts") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config(kTinyTrain);
    cfg.out = tmp.path / "run";
    RunManifest m = run(cfg);

    CHECK(fs::exists(m.out_dir / "manifest.json"));
    CHECK(fs::exists(m.out_dir / "trace.csv"));
    CHECK(fs::exists(m.out_dir / "loss_history.csv"));
    CHECK(fs::exists(m.out_dir / "trajectory.csv"));
    CHECK(fs::exists(m.out_dir / "resolved_config.ini"));
    for (const auto& rel : m.artifacts) CHECK(fs::exists(m.out_dir / rel));

    PruneTrace trace = load_trace_csv(m.out_dir / "trace.csv");
    REQUIRE(trace.iterations.size() == 1);
    CHECK(trace.iterations[0].density == 1.0);

    const std::string hist = slurp(m.out_dir / "loss_history.csv");
    std::size_t lines = 0;
    for (char c : hist) lines += c == '\n';
    CHECK(lines == 13);  // header + 12 epochs
}

TEST_CASE("imp run round-trips through trace.csv and tickets") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config(kTinyImp);
    cfg.out = tmp.path / "imp";
    RunManifest m = run(cfg);

    PruneTrace trace = load_trace_csv(m.out_dir / "trace.csv");
    CHECK(trace.iterations.size() == 7);
    for (std::size_t n = 1; n < trace.iterations.size(); ++n)
        CHECK(trace.iterations[n].unmasked < trace.iterations[n - 1].unmasked);

    const auto files = trace_ticket_files(m.out_dir / "trace.csv");
    REQUIRE(files.size() == trace.iterations.size());
    Ticket t0 = load_ticket(m.out_dir / files[0]);
    CHECK(t0.mask.unmasked_count() == trace.iterations[0].unmasked);
    Ticket t3 = load_ticket(m.out_dir / files[3]);
    CHECK(t3.mask.unmasked_count() == trace.iterations[3].unmasked);
    CHECK(t3.weights_init == t0.weights_init);  // same initialization throughout
}

TEST_CASE("byte-identical reruns for identical configs") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config(kTinyImp);
    cfg.out = tmp.path / "a";
    run(cfg);
    cfg.out = tmp.path / "b";
    run(cfg);

    CHECK(slurp(tmp.path / "a" / "trace.csv") == slurp(tmp.path / "b" / "trace.csv"));
    CHECK(slurp(tmp.path / "a" / "tickets" / "iter_000003.tkt") ==
          slurp(tmp.path / "b" / "tickets" / "iter_000003.tkt"));
}

TEST_CASE("rg observables + fit + compare pipeline on an imp run") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config(kTinyImp);
    cfg.out = tmp.path / "imp";
    run(cfg);

    // rgflow command output
    write_rg_observables(tmp.path / "imp", tmp.path / "imp");
    CHECK(fs::exists(tmp.path / "imp" / "rgflow.csv"));
    CHECK(fs::exists(tmp.path / "imp" / "sigma_summary.txt"));
    const std::string csv = slurp(tmp.path / "imp" / "rgflow.csv");
    CHECK(csv.rfind("iteration,density,M_1", 0) == 0);

    // fit over the trace (7 points available)
    FitReport fit = fit_run(tmp.path / "imp");
    CHECK(fs::exists(tmp.path / "imp" / "fit_points.csv"));
    CHECK(fs::exists(tmp.path / "imp" / "fit_summary.txt"));
    CHECK(fit.fit.points >= 3);

    // compare a run against itself: identical columns, agreement positive
    CompareReport rep = compare_runs(tmp.path / "imp", tmp.path / "imp");
    CHECK(rep.sigma_agreement);
    CHECK(rep.sigma_a == rep.sigma_b);
    CHECK(rep.gamma_a == rep.gamma_b);
}

TEST_CASE("compare flags shuffled layer labels as disagreement") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config(kTinyImp);
    cfg.out = tmp.path / "imp";
    run(cfg);
    write_rg_observables(tmp.path / "imp", tmp.path / "imp");

    // negative control: shuffle the M_i columns of a copied run so the layer
    // classification changes
    fs::create_directories(tmp.path / "shuffled");
    fs::copy(tmp.path / "imp", tmp.path / "shuffled", fs::copy_options::recursive);
    std::string trace = slurp(tmp.path / "shuffled" / "trace.csv");
    // swap the M_1 and M_3 header names; the data columns stay put
    auto pos1 = trace.find("M_1");
    auto pos3 = trace.find("M_3");
    REQUIRE(pos1 != std::string::npos);
    REQUIRE(pos3 != std::string::npos);
    trace.replace(pos3, 3, "M_X");
    trace.replace(pos1, 3, "M_3");
    trace.replace(trace.find("M_X"), 3, "M_1");
    atomic_write(tmp.path / "shuffled" / "trace.csv", trace);

    CompareReport rep = compare_runs(tmp.path / "imp", tmp.path / "shuffled");
    // relabeled layers produce a different sigma ordering unless the run was
    // perfectly symmetric; the verdict must notice
    bool sigma_changed = rep.sigma_a != rep.sigma_b;
    CHECK(sigma_changed);

    // missing rgflow.csv is a descriptive error
    fs::remove(tmp.path / "shuffled" / "rgflow.csv");
    CHECK_THROWS_AS(compare_runs(tmp.path / "imp", tmp.path / "shuffled"), DataError);
}

TEST_CASE("transfer experiment consumes a source run directory") {
    TempDir tmp;
    ExperimentConfig imp = parse_config(kTinyImp);
    imp.out = tmp.path / "src";
    run(imp);

    ExperimentConfig cfg = parse_config(R"(
experiment = transfer_nlo_to_hh
seed = 6
parallelism = 1
[arch]
hidden = 8 8
[train]
epochs = 6
grid_points = 8
[transfer]
t_max_sweep = 1.0
ticket_stride = 3
)");
    cfg.input_run = tmp.path / "src";
    cfg.out = tmp.path / "transfer";
    RunManifest m = run(cfg);
    CHECK(fs::exists(m.out_dir / "transfer.csv"));
    const std::string csv = slurp(m.out_dir / "transfer.csv");
    CHECK(csv.find("nlo_to_hh") != std::string::npos);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 1 + 3);  // header + ceil(7/3) tickets x 1 t_max
}

TEST_CASE("manifest lists exactly the files the run wrote") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config(kTinyTrain);
    cfg.out = tmp.path / "run";
    RunManifest m = run(cfg);
    const std::string manifest = slurp(m.out_dir / "manifest.json");
    CHECK(manifest.find("config_hash") != std::string::npos);
    for (const auto& rel : m.artifacts) {
        CHECK(fs::exists(m.out_dir / rel));
        CHECK(manifest.find(rel) != std::string::npos);
    }
}
