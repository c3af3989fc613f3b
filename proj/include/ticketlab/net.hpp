#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ticketlab {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Feed-forward architecture: scalar time input, sin hidden layers, linear
/// output. Layer l has weight shape rows x cols with rows = fan-in and
/// cols = fan-out, stored row-major; entry (r, c) connects input r to
/// output c. Canonical parameter order is, per layer: weights row-major,
/// then biases.
struct ArchSpec {
    std::vector<int> hidden{50, 50};
    int output_dim = 2;

    int n_layers() const { return static_cast<int>(hidden.size()) + 1; }
    int layer_rows(int l) const {
        return l == 0 ? 1 : hidden[static_cast<std::size_t>(l - 1)];
    }
    int layer_cols(int l) const {
        return l == static_cast<int>(hidden.size()) ? output_dim
                                                    : hidden[static_cast<std::size_t>(l)];
    }
    int layer_weight_count(int l) const { return layer_rows(l) * layer_cols(l); }

    std::size_t total_weights() const {
        std::size_t n = 0;
        for (int l = 0; l < n_layers(); ++l) n += static_cast<std::size_t>(layer_weight_count(l));
        return n;
    }
    std::size_t total_biases() const {
        std::size_t n = 0;
        for (int l = 0; l < n_layers(); ++l) n += static_cast<std::size_t>(layer_cols(l));
        return n;
    }
    /// Weights plus biases; the length of a GradientVector.
    std::size_t total_params() const { return total_weights() + total_biases(); }

    bool operator==(const ArchSpec&) const = default;
};

/// Binary keep/prune indicator per weight. Biases are never masked.
struct Mask {
    std::vector<std::vector<uint8_t>> layers;  // row-major, one per weight

    static Mask ones(const ArchSpec& arch);
    static Mask zeros(const ArchSpec& arch);

    std::size_t unmasked_count() const;
    std::size_t unmasked_count_layer(int l) const;
    std::size_t total_count() const;
    double density() const {
        return static_cast<double>(unmasked_count()) / static_cast<double>(total_count());
    }
    double layer_density(int l) const;

    bool conforms(const ArchSpec& arch) const;
    bool operator==(const Mask&) const = default;
};

/// Weights, biases, and the frozen initialization snapshot. The snapshot is
/// taken at construction and never mutated afterwards.
struct NetworkParams {
    ArchSpec arch;
    uint64_t seed = 0;
    std::vector<std::vector<double>> weights;  // per layer, row-major
    std::vector<std::vector<double>> biases;   // per layer
    std::vector<std::vector<double>> weights_init;
    std::vector<std::vector<double>> biases_init;

    /// Resets weights and biases to the stored initialization.
    void rewind();

    /// Writes the current weights/biases into `out` in canonical order.
    void flatten(std::span<double> out) const;
    /// Loads weights/biases from canonical order.
    void unflatten(std::span<const double> in);
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn layer by layer in
/// canonical order from a seeded mt19937_64; biases zero. Bit-reproducible
/// for a given seed: uniforms are built from raw 64-bit draws, not from
/// std::uniform_real_distribution.
NetworkParams init_params(const ArchSpec& arch, uint64_t seed);

}  // namespace ticketlab
