#pragma once

#include <span>
#include <vector>

#include "ticketlab/net.hpp"

namespace ticketlab {

struct DegenerateNetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PruneTrace;

/// M_i: fraction of the total unmasked |weight| magnitude held by layer i.
/// Biases excluded. Sums to 1.
std::vector<double> layer_magnitude_fraction(const NetworkParams& params, const Mask& mask);

/// lambda_i(n) = M_i(n+1) / M_i(n) per consecutive pair. A zero denominator
/// (layer fully pruned) flags the entry as NaN.
std::vector<std::vector<double>> eigenvalue_sequence(
    std::span<const std::vector<double>> m_fractions);

/// sigma_i(n) = ln lambda_i(n) / ln l(n); nonpositive lambda flags NaN.
/// Requires every coarse-graining factor l > 1.
std::vector<std::vector<double>> sigma_exponents(
    std::span<const std::vector<double>> lambdas, std::span<const double> coarse_grain);

/// Relevant / irrelevant classification with a marginal band: sigma above
/// +margin is relevant (lambda > 1), below -margin irrelevant, else marginal.
enum class LayerClass { relevant, marginal, irrelevant };
std::vector<LayerClass> classify_layers(std::span<const double> sigma, double margin = 0.1);
char layer_class_symbol(LayerClass c);

/// Flow observables of an IMP trace. The coarse-graining factor of the
/// transition n -> n+1 is l = N_before / N_after over unmasked weight
/// counts. sigma_mean averages sigma_i(n) over the pre-floor transitions
/// (both endpoints recorded before any layer reached its floor); per-
/// transition values are kept for inspection.
struct FlowObservables {
    std::vector<std::vector<double>> m_frac;  // per iteration
    std::vector<std::vector<double>> lambda;  // per transition
    std::vector<std::vector<double>> sigma;   // per transition
    std::vector<double> coarse_grain;         // l per transition
    std::vector<double> sigma_mean;           // per layer
    int prefloor_transitions = 0;
};

FlowObservables flow_observables(const PruneTrace& trace);

/// CSV: iteration,density,M_1..L,lambda_1..L,sigma_1..L. Transition columns
/// on row n describe n -> n+1; the last row carries "nan".
std::string rgflow_csv(const PruneTrace& trace);

}  // namespace ticketlab
