#include "ticketlab/scaling.hpp"

#include <algorithm>
#include <cmath>

namespace ticketlab {

PowerLawFit fit_power_law(std::span<const CurvePoint> points, const FitWindow& window) {
    std::vector<CurvePoint> in;
    for (const CurvePoint& p : points)
        if (window.contains(p.density)) in.push_back(p);
    if (in.size() < 3)
        throw InsufficientDataError("fit_power_law: fewer than 3 points in window");
    for (const CurvePoint& p : in)
        if (!(p.density > 0.0) || !(p.epsilon > 0.0))
            throw std::domain_error("fit_power_law: nonpositive density or epsilon");

    // Sort by density so the result is independent of input order even in
    // the last bits of the floating-point sums.
    std::sort(in.begin(), in.end(), [](const CurvePoint& a, const CurvePoint& b) {
        if (a.density != b.density) return a.density < b.density;
        return a.epsilon < b.epsilon;
    });

    const double n = static_cast<double>(in.size());
    double sx = 0.0, sy = 0.0;
    for (const CurvePoint& p : in) {
        sx += std::log(p.density);
        sy += std::log(p.epsilon);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const CurvePoint& p : in) {
        const double dx = std::log(p.density) - mx;
        const double dy = std::log(p.epsilon) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::domain_error("fit_power_law: all densities identical");

    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;

    double ss_res = 0.0;
    for (const CurvePoint& p : in) {
        const double resid = std::log(p.epsilon) - (intercept + slope * std::log(p.density));
        ss_res += resid * resid;
    }

    PowerLawFit fit;
    fit.gamma = -slope;
    fit.c = std::exp(intercept);
    fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    fit.window = window;
    fit.points = static_cast<int>(in.size());
    return fit;
}

bool clamp_epsilons(std::vector<CurvePoint>& points, double floor) {
    bool clamped = false;
    for (CurvePoint& p : points)
        if (p.epsilon < floor) {
            p.epsilon = floor;
            clamped = true;
        }
    return clamped;
}

FitWindow RegimeSegmentation::power_window(std::span<const CurvePoint> points) const {
    FitWindow w;
    if (power_begin > power_end) {
        w.d_min = 1.0;
        w.d_max = 0.0;  // empty
        return w;
    }
    // densities decrease with index
    w.d_max = points[static_cast<std::size_t>(power_begin)].density;
    w.d_min = points[static_cast<std::size_t>(power_end)].density;
    return w;
}

RegimeSegmentation segment_regimes(std::span<const CurvePoint> points,
                                   double plateau_tolerance) {
    if (points.size() < 5)
        throw InsufficientDataError("segment_regimes: need at least 5 points");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].density > points[i - 1].density)
            throw std::invalid_argument("segment_regimes: points must be sorted by decreasing d");
    if (!(plateau_tolerance > 0.0))
        throw std::invalid_argument("segment_regimes: tolerance must be > 0");

    const int n = static_cast<int>(points.size());
    const double factor = 1.0 + plateau_tolerance;
    const double eps_full = points.front().epsilon;
    const double eps_last = points.back().epsilon;

    RegimeSegmentation seg;
    seg.low_begin = 0;
    seg.low_end = -1;
    for (int i = 0; i < n; ++i) {
        if (points[static_cast<std::size_t>(i)].epsilon <= factor * eps_full)
            seg.low_end = i;
        else
            break;
    }

    int high_start = n;
    for (int i = n - 1; i >= 0; --i) {
        const double e = points[static_cast<std::size_t>(i)].epsilon;
        if (e >= eps_last / factor && e <= eps_last * factor)
            high_start = i;
        else
            break;
    }

    if (seg.low_end == n - 1) {
        // everything on the low plateau (flat curve)
        seg.power_begin = n;
        seg.power_end = n - 1;
        seg.high_begin = n;
        seg.high_end = n - 1;
    } else {
        if (high_start <= seg.low_end) {
            seg.clean = false;
            high_start = seg.low_end + 1;
        }
        seg.high_begin = high_start;
        seg.high_end = n - 1;
        seg.power_begin = seg.low_end + 1;
        seg.power_end = high_start - 1;
    }

    auto mean_eps = [&](int b, int e) {
        if (b > e) return 0.0;
        double s = 0.0;
        for (int i = b; i <= e; ++i) s += points[static_cast<std::size_t>(i)].epsilon;
        return s / static_cast<double>(e - b + 1);
    };
    seg.eps_low = mean_eps(seg.low_begin, seg.low_end);
    seg.eps_up = mean_eps(seg.high_begin, seg.high_end);
    return seg;
}

std::vector<PowerLawFit> layerwise_exponents(
    std::span<const std::vector<CurvePoint>> layer_curves, double plateau_tolerance) {
    std::vector<PowerLawFit> fits;
    for (const auto& curve : layer_curves) {
        RegimeSegmentation seg = segment_regimes(curve, plateau_tolerance);
        FitWindow w = seg.power_window(curve);
        const int in_window = seg.power_begin <= seg.power_end
                                  ? seg.power_end - seg.power_begin + 1
                                  : 0;
        if (in_window < 3) {
            w.d_min = curve.back().density;
            w.d_max = curve.front().density;
        }
        fits.push_back(fit_power_law(curve, w));
    }
    return fits;
}

}  // namespace ticketlab
