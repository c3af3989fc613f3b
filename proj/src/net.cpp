#include "ticketlab/net.hpp"

#include <cmath>
#include <random>

namespace ticketlab {

Mask Mask::ones(const ArchSpec& arch) {
    Mask m;
    for (int l = 0; l < arch.n_layers(); ++l)
        m.layers.emplace_back(static_cast<std::size_t>(arch.layer_weight_count(l)), uint8_t{1});
    return m;
}

Mask Mask::zeros(const ArchSpec& arch) {
    Mask m;
    for (int l = 0; l < arch.n_layers(); ++l)
        m.layers.emplace_back(static_cast<std::size_t>(arch.layer_weight_count(l)), uint8_t{0});
    return m;
}

std::size_t Mask::unmasked_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers)
        for (uint8_t b : layer) n += b;
    return n;
}

std::size_t Mask::unmasked_count_layer(int l) const {
    std::size_t n = 0;
    for (uint8_t b : layers[static_cast<std::size_t>(l)]) n += b;
    return n;
}

std::size_t Mask::total_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.size();
    return n;
}

double Mask::layer_density(int l) const {
    const auto& layer = layers[static_cast<std::size_t>(l)];
    return layer.empty() ? 0.0
                         : static_cast<double>(unmasked_count_layer(l)) /
                               static_cast<double>(layer.size());
}

bool Mask::conforms(const ArchSpec& arch) const {
    if (static_cast<int>(layers.size()) != arch.n_layers()) return false;
    for (int l = 0; l < arch.n_layers(); ++l)
        if (layers[static_cast<std::size_t>(l)].size() !=
            static_cast<std::size_t>(arch.layer_weight_count(l)))
            return false;
    return true;
}

void NetworkParams::rewind() {
    weights = weights_init;
    biases = biases_init;
}

void NetworkParams::flatten(std::span<double> out) const {
    std::size_t k = 0;
    for (int l = 0; l < arch.n_layers(); ++l) {
        for (double w : weights[static_cast<std::size_t>(l)]) out[k++] = w;
        for (double b : biases[static_cast<std::size_t>(l)]) out[k++] = b;
    }
    if (k != out.size()) throw ShapeError("flatten: buffer size mismatch");
}

void NetworkParams::unflatten(std::span<const double> in) {
    std::size_t k = 0;
    for (int l = 0; l < arch.n_layers(); ++l) {
        for (double& w : weights[static_cast<std::size_t>(l)]) w = in[k++];
        for (double& b : biases[static_cast<std::size_t>(l)]) b = in[k++];
    }
    if (k != in.size()) throw ShapeError("unflatten: buffer size mismatch");
}

namespace {

// 53-bit uniform in [0, 1); stable across platforms unlike
// std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

NetworkParams init_params(const ArchSpec& arch, uint64_t seed) {
    NetworkParams p;
    p.arch = arch;
    p.seed = seed;
    std::mt19937_64 rng(seed);
    for (int l = 0; l < arch.n_layers(); ++l) {
        const int rows = arch.layer_rows(l);
        const int cols = arch.layer_cols(l);
        const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
        std::vector<double> w(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
        for (double& x : w) x = (2.0 * uniform01(rng) - 1.0) * scale;
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(static_cast<std::size_t>(cols), 0.0);
    }
    p.weights_init = p.weights;
    p.biases_init = p.biases;
    return p;
}

}  // namespace ticketlab
