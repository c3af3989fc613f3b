#include <cmath>

#include "doctest.h"
#include "ticketlab/integrator.hpp"
#include "ticketlab/train.hpp"

using namespace ticketlab;

namespace {

TrainConfig quick_config(int epochs) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.grid_points = 16;
    cfg.t_max = 2.0;
    return cfg;
}

}  // namespace

TEST_CASE("all-zero mask leaves every weight untouched") {
    ArchSpec arch{{6, 6}, 2};
    NetworkParams p = init_params(arch, 1);
    Mask none = Mask::zeros(arch);
    SystemSpec nlo = make_nlo();

    TrainResult r = train(p, none, nlo, quick_config(25));
    CHECK(r.params.weights == p.weights);  // bit equality
    // biases still train (they are never masked)
    CHECK(r.params.biases != p.biases);
}

TEST_CASE("masked weights stay bit-identical through training") {
    ArchSpec arch{{8, 8}, 2};
    NetworkParams p = init_params(arch, 3);
    Mask mask = Mask::ones(arch);
    mask.layers[0][3] = 0;
    mask.layers[1][10] = 0;
    mask.layers[1][63] = 0;
    mask.layers[2][7] = 0;
    SystemSpec nlo = make_nlo();

    TrainResult r = train(p, mask, nlo, quick_config(40));
    CHECK(r.params.weights[0][3] == p.weights[0][3]);
    CHECK(r.params.weights[1][10] == p.weights[1][10]);
    CHECK(r.params.weights[1][63] == p.weights[1][63]);
    CHECK(r.params.weights[2][7] == p.weights[2][7]);
    // unmasked neighbors moved
    CHECK(r.params.weights[0][2] != p.weights[0][2]);
}

TEST_CASE("training is deterministic: identical histories for identical inputs") {
    ArchSpec arch{{10, 10}, 2};
    NetworkParams p = init_params(arch, 7);
    Mask mask = Mask::ones(arch);
    SystemSpec nlo = make_nlo();

    TrainResult a = train(p, mask, nlo, quick_config(30));
    TrainResult b = train(p, mask, nlo, quick_config(30));
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.params.weights == b.params.weights);
    CHECK(a.params.biases == b.params.biases);
}

TEST_CASE("thread count does not change the training result") {
    ArchSpec arch{{12, 12}, 2};
    NetworkParams p = init_params(arch, 9);
    Mask mask = Mask::ones(arch);
    SystemSpec nlo = make_nlo();

    TrainConfig c1 = quick_config(20);
    TrainConfig c2 = quick_config(20);
    c2.threads = 2;
    TrainResult a = train(p, mask, nlo, c1);
    TrainResult b = train(p, mask, nlo, c2);
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.params.weights == b.params.weights);
}

TEST_CASE("loss history has one entry per epoch and decreases overall") {
    ArchSpec arch{{20, 20}, 2};
    NetworkParams p = init_params(arch, 5);
    Mask mask = Mask::ones(arch);
    SystemSpec nlo = make_nlo();

    TrainConfig cfg = quick_config(150);
    TrainResult r = train(p, mask, nlo, cfg);
    REQUIRE(r.loss_history.size() == 150);
    CHECK(r.loss_history.back() < 0.2 * r.loss_history.front());
    for (double l : r.loss_history) CHECK(l >= 0.0);  // sum of squares
}

TEST_CASE("tape and fused engines train to comparable results") {
    ArchSpec arch{{5, 5}, 2};
    NetworkParams p = init_params(arch, 11);
    Mask mask = Mask::ones(arch);
    SystemSpec nlo = make_nlo();

    TrainConfig fused_cfg = quick_config(10);
    TrainConfig tape_cfg = quick_config(10);
    tape_cfg.engine = GradEngine::tape;
    TrainResult a = train(p, mask, nlo, fused_cfg);
    TrainResult b = train(p, mask, nlo, tape_cfg);
    REQUIRE(a.loss_history.size() == b.loss_history.size());
    for (std::size_t e = 0; e < a.loss_history.size(); ++e)
        CHECK(a.loss_history[e] == doctest::Approx(b.loss_history[e]).epsilon(1e-10));
}

TEST_CASE("diverged training raises with the epoch index") {
    ArchSpec arch{{6, 6}, 2};
    NetworkParams p = init_params(arch, 2);
    // an overflowing weight sends x_hat^3 and the residuals to inf
    p.weights[2][0] = 1e308;
    Mask mask = Mask::ones(arch);
    SystemSpec nlo = make_nlo();

    TrainConfig cfg = quick_config(50);
    try {
        train(p, mask, nlo, cfg);
        FAIL("expected TrainDivergedError");
    } catch (const TrainDivergedError& e) {
        CHECK(e.epoch == 0);
        CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
}

TEST_CASE("per-step gradient matches finite differences on spot-checked parameters") {
    ArchSpec arch{{50, 50}, 2};
    NetworkParams p = init_params(arch, 4);
    Mask mask = Mask::ones(arch);
    SystemSpec nlo = make_nlo();
    auto grid = make_grid(4.0 * M_PI, 40);
    ResidualEvaluator ev(arch, nlo, grid);

    LossGrad lg = ev.loss_and_grad(p, mask);
    std::vector<double> flat(arch.total_params());
    p.flatten(flat);
    NetworkParams scratch = p;
    auto loss_at = [&](std::size_t i, double v) {
        const double orig = flat[i];
        flat[i] = v;
        scratch.unflatten(flat);
        const double l = ev.loss(scratch, mask);
        flat[i] = orig;
        return l;
    };
    // spot-check a scattering of canonical indices across layers and biases
    const double h = 1e-6;
    for (std::size_t i : {0ul, 17ul, 49ul, 55ul, 99ul, 300ul, 1700ul, 2649ul, 2680ul, 2751ul}) {
        const double fd = (loss_at(i, flat[i] + h) - loss_at(i, flat[i] - h)) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(lg.grad[i]), 1e-10});
        CHECK(std::abs(fd - lg.grad[i]) / denom < 1e-5);
    }
}

TEST_CASE("config validation rejects bad values") {
    TrainConfig cfg;
    cfg.epochs = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.grid_points = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.t_max = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.beta2 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
