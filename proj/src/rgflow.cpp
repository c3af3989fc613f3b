#include "ticketlab/rgflow.hpp"

#include <cmath>
#include <limits>

#include "ticketlab/csv.hpp"
#include "ticketlab/pruner.hpp"

namespace ticketlab {

std::vector<double> layer_magnitude_fraction(const NetworkParams& params, const Mask& mask) {
    if (!mask.conforms(params.arch))
        throw ShapeError("layer_magnitude_fraction: mask mismatch");
    const int L = params.arch.n_layers();
    std::vector<double> sums(static_cast<std::size_t>(L), 0.0);
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
        const auto& w = params.weights[static_cast<std::size_t>(l)];
        const auto& m = mask.layers[static_cast<std::size_t>(l)];
        double s = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k)
            if (m[k]) s += std::abs(w[k]);
        sums[static_cast<std::size_t>(l)] = s;
        total += s;
    }
    if (total == 0.0)
        throw DegenerateNetworkError("layer_magnitude_fraction: all unmasked weights are zero");
    for (double& s : sums) s /= total;
    return sums;
}

std::vector<std::vector<double>> eigenvalue_sequence(
    std::span<const std::vector<double>> m_fractions) {
    if (m_fractions.size() < 2)
        throw std::invalid_argument("eigenvalue_sequence needs at least 2 iterations");
    std::vector<std::vector<double>> lambdas;
    for (std::size_t n = 0; n + 1 < m_fractions.size(); ++n) {
        const auto& cur = m_fractions[n];
        const auto& next = m_fractions[n + 1];
        if (cur.size() != next.size())
            throw ShapeError("eigenvalue_sequence: layer count changed between iterations");
        std::vector<double> lam(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i)
            lam[i] = cur[i] == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                   : next[i] / cur[i];
        lambdas.push_back(std::move(lam));
    }
    return lambdas;
}

std::vector<std::vector<double>> sigma_exponents(std::span<const std::vector<double>> lambdas,
                                                 std::span<const double> coarse_grain) {
    if (lambdas.size() != coarse_grain.size())
        throw ShapeError("sigma_exponents: one coarse-graining factor per transition required");
    std::vector<std::vector<double>> sigmas;
    for (std::size_t n = 0; n < lambdas.size(); ++n) {
        if (!(coarse_grain[n] > 1.0))
            throw std::invalid_argument("sigma_exponents: coarse-graining factor must be > 1");
        const double logl = std::log(coarse_grain[n]);
        std::vector<double> sig(lambdas[n].size());
        for (std::size_t i = 0; i < sig.size(); ++i) {
            const double lam = lambdas[n][i];
            sig[i] = (std::isnan(lam) || lam <= 0.0) ? std::numeric_limits<double>::quiet_NaN()
                                                     : std::log(lam) / logl;
        }
        sigmas.push_back(std::move(sig));
    }
    return sigmas;
}

std::vector<LayerClass> classify_layers(std::span<const double> sigma, double margin) {
    std::vector<LayerClass> out;
    for (double s : sigma)
        out.push_back(s > margin    ? LayerClass::relevant
                      : s < -margin ? LayerClass::irrelevant
                                    : LayerClass::marginal);
    return out;
}

char layer_class_symbol(LayerClass c) {
    switch (c) {
        case LayerClass::relevant: return '+';
        case LayerClass::marginal: return '0';
        case LayerClass::irrelevant: return '-';
    }
    return '?';
}

FlowObservables flow_observables(const PruneTrace& trace) {
    FlowObservables obs;
    for (const auto& it : trace.iterations) obs.m_frac.push_back(it.layer_mag_fraction);
    if (obs.m_frac.size() < 2)
        throw std::invalid_argument("flow_observables needs at least 2 IMP iterations");

    for (std::size_t n = 0; n + 1 < trace.iterations.size(); ++n) {
        const double before = static_cast<double>(trace.iterations[n].unmasked);
        const double after = static_cast<double>(trace.iterations[n + 1].unmasked);
        obs.coarse_grain.push_back(before / after);
    }
    obs.lambda = eigenvalue_sequence(obs.m_frac);
    obs.sigma = sigma_exponents(obs.lambda, obs.coarse_grain);

    const std::size_t layers = obs.m_frac.front().size();
    obs.sigma_mean.assign(layers, 0.0);
    int used = 0;
    for (std::size_t n = 0; n + 1 < trace.iterations.size(); ++n) {
        if (trace.iterations[n].any_layer_at_floor || trace.iterations[n + 1].any_layer_at_floor)
            continue;
        bool finite = true;
        for (double s : obs.sigma[n]) finite &= std::isfinite(s);
        if (!finite) continue;
        for (std::size_t i = 0; i < layers; ++i) obs.sigma_mean[i] += obs.sigma[n][i];
        ++used;
    }
    obs.prefloor_transitions = used;
    if (used == 0)
        obs.sigma_mean.assign(layers, std::numeric_limits<double>::quiet_NaN());
    else
        for (double& s : obs.sigma_mean) s /= used;
    return obs;
}

std::string rgflow_csv(const PruneTrace& trace) {
    FlowObservables obs = flow_observables(trace);
    const std::size_t layers = obs.m_frac.front().size();
    std::string out;
    std::vector<std::string> header{"iteration", "density"};
    for (std::size_t i = 1; i <= layers; ++i) header.push_back("M_" + std::to_string(i));
    for (std::size_t i = 1; i <= layers; ++i) header.push_back("lambda_" + std::to_string(i));
    for (std::size_t i = 1; i <= layers; ++i) header.push_back("sigma_" + std::to_string(i));
    csv_row(out, header);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t n = 0; n < trace.iterations.size(); ++n) {
        std::vector<std::string> row{std::to_string(trace.iterations[n].iteration),
                                     format_double(trace.iterations[n].density)};
        for (double m : obs.m_frac[n]) row.push_back(format_double(m));
        const bool last = n + 1 == trace.iterations.size();
        for (std::size_t i = 0; i < layers; ++i)
            row.push_back(format_double(last ? nan : obs.lambda[n][i]));
        for (std::size_t i = 0; i < layers; ++i)
            row.push_back(format_double(last ? nan : obs.sigma[n][i]));
        csv_row(out, row);
    }
    return out;
}

}  // namespace ticketlab
