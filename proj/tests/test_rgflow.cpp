#include <cmath>

#include "doctest.h"
#include "ticketlab/pruner.hpp"
#include "ticketlab/rgflow.hpp"

using namespace ticketlab;

namespace {

NetworkParams params_with(const ArchSpec& arch, std::vector<std::vector<double>> w) {
    NetworkParams p = init_params(arch, 0);
    p.weights = std::move(w);
    return p;
}

}  // namespace

TEST_CASE("layer magnitude fractions") {
    SUBCASE("single layer gives [1]") {
        ArchSpec arch{{2}, 2};  // layers: 1x2 and 2x2
        NetworkParams p = params_with(arch, {{0.5, -0.5}, {0.0, 0.0, 0.0, 0.0}});
        Mask m = Mask::ones(arch);
        // second layer all zero: total magnitude lives in layer 1
        auto frac = layer_magnitude_fraction(p, m);
        CHECK(frac[0] == 1.0);
        CHECK(frac[1] == 0.0);
    }
    SUBCASE("known sums 1, 2, 7 give 0.1, 0.2, 0.7") {
        ArchSpec arch{{2, 2}, 2};  // 1x2, 2x2, 2x2
        NetworkParams p = params_with(
            arch, {{0.5, -0.5}, {1.0, -0.5, 0.25, 0.25}, {3.5, -1.75, 0.875, -0.875}});
        Mask m = Mask::ones(arch);
        auto frac = layer_magnitude_fraction(p, m);
        CHECK(frac[0] == doctest::Approx(0.1));
        CHECK(frac[1] == doctest::Approx(0.2));
        CHECK(frac[2] == doctest::Approx(0.7));
    }
    SUBCASE("masked weights do not count") {
        ArchSpec arch{{2}, 2};
        NetworkParams p = params_with(arch, {{1.0, 1.0}, {1.0, 1.0, 1.0, 1.0}});
        Mask m = Mask::ones(arch);
        m.layers[1] = {0, 0, 0, 1};
        auto frac = layer_magnitude_fraction(p, m);
        CHECK(frac[0] == doctest::Approx(2.0 / 3.0));
        CHECK(frac[1] == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("all-zero network is degenerate") {
        ArchSpec arch{{2}, 2};
        NetworkParams p = params_with(arch, {{0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}});
        Mask m = Mask::ones(arch);
        CHECK_THROWS_AS(layer_magnitude_fraction(p, m), DegenerateNetworkError);
    }
    SUBCASE("fractions sum to one") {
        ArchSpec arch{{13, 9}, 4};
        NetworkParams p = init_params(arch, 21);
        Mask m = Mask::ones(arch);
        auto frac = layer_magnitude_fraction(p, m);
        double sum = 0.0;
        for (double f : frac) {
            CHECK(f >= 0.0);
            sum += f;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("eigenvalue sequences") {
    SUBCASE("constant flow gives lambda = 1") {
        std::vector<std::vector<double>> m{{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}};
        auto lam = eigenvalue_sequence(m);
        REQUIRE(lam.size() == 2);
        for (const auto& row : lam)
            for (double l : row) CHECK(l == 1.0);
    }
    SUBCASE("worked example") {
        std::vector<std::vector<double>> m{{0.5, 0.5}, {0.6, 0.4}};
        auto lam = eigenvalue_sequence(m);
        REQUIRE(lam.size() == 1);
        CHECK(lam[0][0] == doctest::Approx(1.2));
        CHECK(lam[0][1] == doctest::Approx(0.8));
    }
    SUBCASE("single iteration violates the precondition") {
        std::vector<std::vector<double>> m{{1.0}};
        CHECK_THROWS_AS(eigenvalue_sequence(m), std::invalid_argument);
    }
    SUBCASE("fully pruned layer flags NaN") {
        std::vector<std::vector<double>> m{{0.0, 1.0}, {0.0, 1.0}};
        auto lam = eigenvalue_sequence(m);
        CHECK(std::isnan(lam[0][0]));
        CHECK(lam[0][1] == 1.0);
    }
}

TEST_CASE("sigma exponents") {
    SUBCASE("lambda = 1 gives sigma = 0, lambda = l gives sigma = 1") {
        std::vector<std::vector<double>> lam{{1.0, 1.25}};
        std::vector<double> l{1.25};
        auto sig = sigma_exponents(lam, l);
        CHECK(sig[0][0] == 0.0);
        CHECK(sig[0][1] == doctest::Approx(1.0));
    }
    SUBCASE("l <= 1 is rejected") {
        std::vector<std::vector<double>> lam{{1.0}};
        std::vector<double> l{1.0};
        CHECK_THROWS_AS(sigma_exponents(lam, l), std::invalid_argument);
    }
    SUBCASE("nonpositive lambda flags NaN") {
        std::vector<std::vector<double>> lam{{-0.5, 2.0}};
        std::vector<double> l{1.5};
        auto sig = sigma_exponents(lam, l);
        CHECK(std::isnan(sig[0][0]));
        CHECK(sig[0][1] == doctest::Approx(std::log(2.0) / std::log(1.5)));
    }
}

TEST_CASE("layer classification with a marginal band") {
    std::vector<double> sigma{0.31, -0.01, 0.74, -0.4};
    auto cls = classify_layers(sigma, 0.1);
    CHECK(cls[0] == LayerClass::relevant);
    CHECK(cls[1] == LayerClass::marginal);
    CHECK(cls[2] == LayerClass::relevant);
    CHECK(cls[3] == LayerClass::irrelevant);
}

TEST_CASE("flow observables over a real small IMP trace") {
    ArchSpec arch{{12, 12}, 2};
    SystemSpec nlo = make_nlo();
    PruneSchedule s = default_schedule(PruneScope::global, 0.2);
    s.max_iterations = 8;
    s.floor_density = 0.05;
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.grid_points = 10;
    cfg.t_max = 2.0;
    PruneTrace trace = imp_run(nlo, arch, s, cfg);
    REQUIRE(trace.iterations.size() >= 3);

    FlowObservables obs = flow_observables(trace);

    SUBCASE("normalization at every iteration") {
        for (const auto& m : obs.m_frac) {
            double sum = 0.0;
            for (double f : m) sum += f;
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
    SUBCASE("telescoping product of eigenvalues") {
        const std::size_t last = obs.m_frac.size() - 1;
        for (std::size_t i = 0; i < obs.m_frac.front().size(); ++i) {
            double prod = 1.0;
            for (const auto& lam : obs.lambda) prod *= lam[i];
            const double expected = obs.m_frac[last][i] / obs.m_frac[0][i];
            CHECK(std::abs(prod - expected) <= 1e-10 * std::abs(expected));
        }
    }
    SUBCASE("coarse-graining factors reflect the count ratio") {
        for (std::size_t n = 0; n + 1 < trace.iterations.size(); ++n) {
            const double expected = static_cast<double>(trace.iterations[n].unmasked) /
                                    static_cast<double>(trace.iterations[n + 1].unmasked);
            CHECK(obs.coarse_grain[n] == expected);
            CHECK(obs.coarse_grain[n] > 1.0);
        }
    }
    SUBCASE("csv emission has the documented columns") {
        std::string csv = rgflow_csv(trace);
        CHECK(csv.find("iteration,density,M_1,M_2,M_3,lambda_1,lambda_2,lambda_3,sigma_1,"
                       "sigma_2,sigma_3") == 0);
        // one header + one row per iteration
        std::size_t lines = 0;
        for (char c : csv) lines += c == '\n';
        CHECK(lines == trace.iterations.size() + 1);
        CHECK(csv.find("nan") != std::string::npos);  // last-row transitions
    }
}
