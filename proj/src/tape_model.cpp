#include "ticketlab/tape_model.hpp"

namespace ticketlab {

TapeNet::TapeNet(Tape& tape, const NetworkParams& params, const Mask& mask)
    : tape_(&tape), arch_(params.arch) {
    if (!mask.conforms(arch_)) throw ShapeError("TapeNet: mask does not conform to arch");
    for (int l = 0; l < arch_.n_layers(); ++l) {
        const auto& w = params.weights[static_cast<std::size_t>(l)];
        const auto& m = mask.layers[static_cast<std::size_t>(l)];
        const auto& b = params.biases[static_cast<std::size_t>(l)];
        std::vector<Var> wv;
        wv.reserve(w.size());
        for (std::size_t k = 0; k < w.size(); ++k)
            wv.push_back(tape.param(w[k]) * tape.constant(static_cast<double>(m[k])));
        masked_weights_.push_back(std::move(wv));
        std::vector<Var> bv;
        bv.reserve(b.size());
        for (double x : b) bv.push_back(tape.param(x));
        biases_.push_back(std::move(bv));
    }
}

std::vector<Var> TapeNet::forward(Var t) const {
    std::vector<Var> act{t};
    for (int l = 0; l < arch_.n_layers(); ++l) {
        const int rows = arch_.layer_rows(l);
        const int cols = arch_.layer_cols(l);
        const auto& w = masked_weights_[static_cast<std::size_t>(l)];
        const auto& b = biases_[static_cast<std::size_t>(l)];
        std::vector<Var> next;
        next.reserve(static_cast<std::size_t>(cols));
        for (int c = 0; c < cols; ++c) {
            Var z = b[static_cast<std::size_t>(c)];
            for (int r = 0; r < rows; ++r)
                z = z + w[static_cast<std::size_t>(r * cols + c)] * act[static_cast<std::size_t>(r)];
            next.push_back(l + 1 < arch_.n_layers() ? sin(z) : z);
        }
        act = std::move(next);
    }
    return act;
}

std::vector<Var> apply_ansatz(std::span<const Var> raw, Var t,
                              std::span<const double> initial_state) {
    if (raw.size() != initial_state.size())
        throw ShapeError("apply_ansatz: output/initial-state dimension mismatch");
    Tape& tape = *t.tape;
    Var bump = 1.0 - exp(-t);
    std::vector<Var> xhat;
    xhat.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        xhat.push_back(tape.constant(initial_state[i]) + bump * raw[i]);
    return xhat;
}

Var residual_loss(Tape& tape, const NetworkParams& params, const Mask& mask,
                  const SystemSpec& system, std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("residual_loss: empty grid");
    if (params.arch.output_dim != system.dim)
        throw ShapeError("residual_loss: network output dim != system dim");
    TapeNet net(tape, params, mask);
    Var sum = tape.constant(0.0);
    for (double tk : grid) {
        Var t = tape.input(tk);
        std::vector<Var> raw = net.forward(t);
        std::vector<Var> xhat = apply_ansatz(raw, t, system.initial_state);
        for (Var r : system.residuals(tape, xhat)) sum = sum + r * r;
    }
    return sum * tape.constant(1.0 / static_cast<double>(grid.size()));
}

}  // namespace ticketlab
