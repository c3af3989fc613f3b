#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ticketlab/config.hpp"
#include "ticketlab/rgflow.hpp"
#include "ticketlab/scaling.hpp"

namespace ticketlab {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct RunManifest {
    std::string tool_version;
    std::string config_hash;  // FNV-1a 64 of the resolved config, hex
    std::string resolved_config;
    std::vector<std::string> artifacts;  // paths relative to the run directory
    double wall_clock_seconds = 0.0;
    bool diverged = false;
    std::filesystem::path out_dir;
};

uint64_t fnv1a64(std::string_view bytes);

/// Executes the experiment, writes every artifact plus manifest.json into
/// the run directory, and returns the manifest. Numeric CSV content is
/// byte-identical across re-runs with the same config.
RunManifest run(const ExperimentConfig& config);

/// Out dir resolution: explicit `out`, else $TICKETLAB_OUT/<kind>-seed<seed>,
/// else ./runs/<kind>-seed<seed>.
std::filesystem::path resolve_out_dir(const ExperimentConfig& config);

void write_trace_csv(const std::filesystem::path& path, const PruneTrace& trace,
                     const std::vector<std::string>& ticket_files);
/// Masks and schedule are not reconstructed; everything the observables and
/// fits need is.
PruneTrace load_trace_csv(const std::filesystem::path& path);
std::vector<std::string> trace_ticket_files(const std::filesystem::path& path);

std::vector<CurvePoint> trace_curve(const PruneTrace& trace);

struct FitReport {
    PowerLawFit fit;
    RegimeSegmentation segments;
    bool clamped = false;
    std::string text;
};

/// Segment + power-law fit over a run's trace; writes fit_points.csv and
/// fit_summary.txt into the run directory.
FitReport fit_run(const std::filesystem::path& run_dir,
                  std::optional<FitWindow> window = std::nullopt,
                  double plateau_tolerance = 1.0);

struct CompareReport {
    std::vector<double> sigma_a, sigma_b;
    std::vector<LayerClass> class_a, class_b;
    bool sigma_agreement = false;
    double gamma_a = 0.0, gamma_b = 0.0;
    std::string text;
};

/// Side-by-side sigma table and layer classification of two runs, plus a
/// gamma comparison. Both runs must already have rgflow.csv.
CompareReport compare_runs(const std::filesystem::path& run_a,
                           const std::filesystem::path& run_b);

/// rgflow.csv + sigma_summary.txt for an existing run directory.
std::vector<std::string> write_rg_observables(const std::filesystem::path& run_dir,
                                              const std::filesystem::path& out_dir);

}  // namespace ticketlab
