#include "ticketlab/train.hpp"

#include <cmath>

#include "ticketlab/integrator.hpp"
#include "ticketlab/tape_model.hpp"

namespace ticketlab {

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(lr_min >= 0.0) || lr_min > learning_rate)
        throw std::invalid_argument("lr_min must lie in [0, learning_rate]");
    if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
    if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw std::invalid_argument("adam betas must lie in [0, 1)");
    if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be > 0");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

namespace {

// Mask expanded to the canonical parameter layout; biases map to 1.
std::vector<double> canonical_mask(const ArchSpec& arch, const Mask& mask) {
    std::vector<double> m;
    m.reserve(arch.total_params());
    for (int l = 0; l < arch.n_layers(); ++l) {
        for (uint8_t b : mask.layers[static_cast<std::size_t>(l)])
            m.push_back(static_cast<double>(b));
        m.insert(m.end(), static_cast<std::size_t>(arch.layer_cols(l)), 1.0);
    }
    return m;
}

LossGrad tape_loss_and_grad(const NetworkParams& params, const Mask& mask,
                            const SystemSpec& system, std::span<const double> grid) {
    Tape tape;
    Var loss = residual_loss(tape, params, mask, system, grid);
    LossGrad out;
    out.loss = tape.value(loss);
    out.grad = tape.reverse(loss);
    return out;
}

}  // namespace

TrainResult train(const NetworkParams& params, const Mask& mask,
                  const ResidualEvaluator& evaluator, const TrainConfig& config) {
    config.validate();
    if (!mask.conforms(params.arch)) throw ShapeError("train: mask does not conform");

    TrainResult result;
    result.params = params;
    result.loss_history.reserve(static_cast<std::size_t>(config.epochs));

    const std::size_t n = params.arch.total_params();
    const std::vector<double> cmask = canonical_mask(params.arch, mask);
    std::vector<double> flat(n), m1(n, 0.0), m2(n, 0.0);
    result.params.flatten(flat);

    double b1t = 1.0, b2t = 1.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        LossGrad lg = config.engine == GradEngine::fused
                          ? evaluator.loss_and_grad(result.params, mask)
                          : tape_loss_and_grad(result.params, mask, evaluator.system(),
                                               evaluator.grid());
        if (!std::isfinite(lg.loss)) throw TrainDivergedError(epoch);
        result.loss_history.push_back(lg.loss);

        double lr = config.learning_rate;
        if (config.lr_schedule == LrSchedule::cosine && config.epochs > 1) {
            const double phase = static_cast<double>(epoch) / (config.epochs - 1);
            lr = config.lr_min +
                 0.5 * (config.learning_rate - config.lr_min) * (1.0 + std::cos(M_PI * phase));
        }

        b1t *= config.beta1;
        b2t *= config.beta2;
        const double corr1 = 1.0 - b1t;
        const double corr2 = 1.0 - b2t;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = lg.grad[i] * cmask[i];
            m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * g;
            m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * g * g;
            const double mhat = m1[i] / corr1;
            const double vhat = m2[i] / corr2;
            flat[i] -= cmask[i] * lr * mhat / (std::sqrt(vhat) + config.adam_epsilon);
        }
        result.params.unflatten(flat);
    }
    return result;
}

TrainResult train(const NetworkParams& params, const Mask& mask, const SystemSpec& system,
                  const TrainConfig& config) {
    config.validate();
    ResidualEvaluator evaluator(params.arch, system, make_grid(config.t_max, config.grid_points),
                                config.threads);
    return train(params, mask, evaluator, config);
}

}  // namespace ticketlab
