#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ticketlab {

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CurvePoint {
    double density = 0.0;
    double epsilon = 0.0;
};

struct FitWindow {
    double d_min = 0.0;
    double d_max = 1.0;  // inclusive
    bool contains(double d) const { return d >= d_min && d <= d_max; }
};

struct PowerLawFit {
    double c = 0.0;
    double gamma = 0.0;
    double r2 = 0.0;
    FitWindow window;
    int points = 0;
};

/// OLS of ln(eps) on ln(d) inside the window; gamma = -slope, c = e^intercept.
/// Deterministic; invariant under point reordering. Throws
/// InsufficientDataError below 3 points and std::domain_error on d or eps <= 0.
PowerLawFit fit_power_law(std::span<const CurvePoint> points, const FitWindow& window);

/// Clamp eps values up to `floor` before log fits (exact zeros happen on
/// fixed-point initial conditions). Returns true if anything was clamped.
bool clamp_epsilons(std::vector<CurvePoint>& points, double floor = 1e-16);

struct RegimeSegmentation {
    // Index ranges into the input (sorted by decreasing density); empty
    // ranges have begin > end.
    int low_begin = 0, low_end = -1;
    int power_begin = 0, power_end = -1;
    int high_begin = 0, high_end = -1;
    double eps_low = 0.0;  // mean epsilon over the low plateau
    double eps_up = 0.0;   // mean epsilon over the high plateau
    bool clean = true;     // false when the plateaus overlapped (pathological curve)

    FitWindow power_window(std::span<const CurvePoint> points) const;
};

/// Splits a pruning curve (sorted by decreasing density, >= 5 points) into
/// low-error plateau / power-law region / high-error plateau. A point is on
/// the low plateau while eps <= (1+tol) * eps(d_max); on the high plateau
/// while eps lies within a (1+tol) factor band of eps at the lowest density.
RegimeSegmentation segment_regimes(std::span<const CurvePoint> points, double plateau_tolerance);

/// Per-layer gamma from single-layer traces: segment, then fit inside each
/// power-law window (whole curve when the window has fewer than 3 points,
/// which yields gamma ~ 0 for never-degrading layers).
std::vector<PowerLawFit> layerwise_exponents(
    std::span<const std::vector<CurvePoint>> layer_curves, double plateau_tolerance = 1.0);

}  // namespace ticketlab
