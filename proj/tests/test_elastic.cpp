#include <random>

#include "doctest.h"
#include "ticketlab/elastic.hpp"

using namespace ticketlab;

namespace {

double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Ticket random_ticket(const ArchSpec& arch, std::mt19937_64& rng, double keep = 0.7) {
    NetworkParams p = init_params(arch, rng());
    Mask m = Mask::ones(arch);
    for (auto& layer : m.layers)
        for (auto& b : layer)
            if (u01(rng) > keep) b = 0;
    return Ticket::from_params(p, m);
}

const ArchSpec kNloArch{{50, 50}, 2};
const ArchSpec kHhArch{{50, 50}, 4};

}  // namespace

TEST_CASE("stretch duplicates the final-layer columns (a,b) -> (a,b,a,b)") {
    ArchSpec src{{3, 3}, 2};
    ArchSpec dst{{3, 3}, 4};
    std::mt19937_64 rng(1);
    Ticket t = random_ticket(src, rng);
    // make layer-3 mask recognizable: rows x 2, alternating
    t.mask.layers[2] = {1, 0, 0, 1, 1, 1};
    Ticket s = stretch_ticket(t, dst);

    CHECK(s.arch == dst);
    CHECK(s.mask.layers[2] == std::vector<uint8_t>{1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 1, 1});
    CHECK(s.mask.layers[0] == t.mask.layers[0]);
    CHECK(s.mask.layers[1] == t.mask.layers[1]);
    // weights duplicated columnwise
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(s.weights_init[2][static_cast<std::size_t>(r * 4 + c)] ==
                  t.weights_init[2][static_cast<std::size_t>(r * 2 + c % 2)]);
    // biases follow the same duplication
    CHECK(s.biases_init[2] ==
          std::vector<double>{t.biases_init[2][0], t.biases_init[2][1], t.biases_init[2][0],
                              t.biases_init[2][1]});
}

TEST_CASE("stretch keeps full and empty tickets full and empty") {
    std::mt19937_64 rng(2);
    NetworkParams p = init_params(kNloArch, 5);
    Ticket full = Ticket::from_params(p, Mask::ones(kNloArch));
    Ticket stretched = stretch_ticket(full, kHhArch);
    CHECK(stretched.mask == Mask::ones(kHhArch));

    Ticket empty = Ticket::from_params(p, Mask::ones(kNloArch));
    std::fill(empty.mask.layers[2].begin(), empty.mask.layers[2].end(), uint8_t{0});
    Ticket se = stretch_ticket(empty, kHhArch);
    for (uint8_t b : se.mask.layers[2]) CHECK(b == 0);
}

TEST_CASE("squeeze drops the requested 1-based blocks") {
    ArchSpec src{{2, 2}, 4};
    ArchSpec dst{{2, 2}, 2};
    std::mt19937_64 rng(3);
    Ticket t = random_ticket(src, rng);
    t.weights_init[2] = {1, 2, 3, 4, 5, 6, 7, 8};  // rows x 4, columns a b c d
    t.mask.layers[2] = {1, 0, 1, 0, 0, 1, 0, 1};
    t.biases_init[2] = {10, 20, 30, 40};

    Ticket s = squeeze_ticket(t, dst, {2, 4});
    CHECK(s.arch == dst);
    CHECK(s.weights_init[2] == std::vector<double>{1, 3, 5, 7});  // columns a, c
    CHECK(s.mask.layers[2] == std::vector<uint8_t>{1, 1, 0, 0});
    CHECK(s.biases_init[2] == std::vector<double>{10, 30});
}

TEST_CASE("squeeze edge cases") {
    ArchSpec src{{4, 4}, 4};
    std::mt19937_64 rng(4);
    Ticket t = random_ticket(src, rng);

    SUBCASE("empty drop with equal dims is the identity") {
        Ticket s = squeeze_ticket(t, src, {});
        CHECK(s.mask == t.mask);
        CHECK(s.weights_init == t.weights_init);
        CHECK(s.biases_init == t.biases_init);
    }
    SUBCASE("dropping everything cannot reach a 2-output target") {
        ArchSpec dst{{4, 4}, 2};
        CHECK_THROWS_AS(squeeze_ticket(t, dst, {1, 2, 3, 4}), ShapeError);
    }
    SUBCASE("out-of-range drop index") {
        ArchSpec dst{{4, 4}, 2};
        CHECK_THROWS_AS(squeeze_ticket(t, dst, {2, 5}), ShapeError);
    }
    SUBCASE("hidden width mismatch") {
        ArchSpec dst{{4, 8}, 2};
        CHECK_THROWS_AS(squeeze_ticket(t, dst, {2, 4}), ShapeError);
    }
}

TEST_CASE("property: squeeze(stretch(t), {3,4}) is the identity on tickets") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        ArchSpec src{{4, 3}, 2};
        ArchSpec wide{{4, 3}, 4};
        Ticket t = random_ticket(src, rng, 0.5 + 0.5 * u01(rng));
        Ticket round = squeeze_ticket(stretch_ticket(t, wide), src, {3, 4});
        CHECK(round.mask == t.mask);
        CHECK(round.weights_init == t.weights_init);
        CHECK(round.biases_init == t.biases_init);
    }
}

TEST_CASE("property: stretching preserves the final-layer density exactly") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 1000; ++trial) {
        Ticket t = random_ticket(kNloArch, rng, u01(rng));
        Ticket s = stretch_ticket(t, kHhArch);
        CHECK(s.mask.unmasked_count_layer(2) == 2 * t.mask.unmasked_count_layer(2));
        CHECK(s.mask.layer_density(2) == t.mask.layer_density(2));
        // no weight unmasked that duplication did not introduce
        for (std::size_t r = 0; r < 50; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                CHECK(s.mask.layers[2][r * 4 + c] == t.mask.layers[2][r * 2 + c % 2]);
    }
}

TEST_CASE("transfer_evaluate produces one point per (ticket, t_max)") {
    ArchSpec src{{8, 8}, 2};
    std::mt19937_64 rng(7);
    std::vector<Ticket> tickets;
    for (int i = 0; i < 3; ++i) tickets.push_back(random_ticket(src, rng, 0.9));

    SystemSpec hh = make_hh();
    TransferOptions opt;
    opt.t_max_sweep = {1.0, 2.0};
    opt.train.epochs = 5;
    opt.train.grid_points = 8;
    auto points = transfer_evaluate(tickets, hh, opt);
    REQUIRE(points.size() == 6);
    for (const auto& p : points) {
        CHECK((p.t_max == 1.0 || p.t_max == 2.0));
        CHECK(p.epsilon >= 0.0);
        CHECK_FALSE(p.diverged);
    }

    SUBCASE("stride skips tickets") {
        opt.ticket_stride = 2;
        auto strided = transfer_evaluate(tickets, hh, opt);
        CHECK(strided.size() == 4);  // tickets 0 and 2, two t_max values
    }
    SUBCASE("deterministic") {
        auto again = transfer_evaluate(tickets, hh, opt);
        REQUIRE(again.size() == points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            CHECK(again[i].epsilon == points[i].epsilon);
            CHECK(again[i].final_loss == points[i].final_loss);
        }
    }
}

TEST_CASE("full-density ticket transfer equals training from the transferred init") {
    // with an all-ones mask the transfer is just training the target network
    // from the stretched initialization
    ArchSpec src{{6, 6}, 2};
    NetworkParams p = init_params(src, 9);
    Ticket full = Ticket::from_params(p, Mask::ones(src));

    SystemSpec hh = make_hh();
    TransferOptions opt;
    opt.t_max_sweep = {1.5};
    opt.train.epochs = 12;
    opt.train.grid_points = 10;
    auto points = transfer_evaluate(std::vector<Ticket>{full}, hh, opt);
    REQUIRE(points.size() == 1);

    ArchSpec dst{{6, 6}, 4};
    Ticket stretched = stretch_ticket(full, dst);
    TrainConfig cfg = opt.train;
    cfg.t_max = 1.5;
    TrainResult direct = train(stretched.materialize(), stretched.mask, hh, cfg);
    CHECK(points[0].final_loss == direct.loss_history.back());
}
