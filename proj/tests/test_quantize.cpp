#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "apgm/error.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/quantize.hpp"

using namespace apgm;

namespace {

// Independent oracle: nearest of the 256 reconstruction levels k/255, ties
// resolved away from zero by scanning upward.
std::uint8_t oracle_quantize(double m) {
    int best = 0;
    double best_err = 2.0;
    for (int k = 0; k <= 255; ++k) {
        const double err = std::abs(m - k / 255.0);
        if (err < best_err - 1e-15 || (std::abs(err - best_err) <= 1e-15 && k > best)) {
            best = k;
            best_err = err;
        }
    }
    return static_cast<std::uint8_t>(best);
}

GridMap single_cell_grid(float belief, float disbelief) {
    GridMap g;
    g.frame_id = "t";
    Patch p;
    p.patch_id = 1;
    p.cell_size = 0.1f;
    p.cells_per_side = 1;
    p.cells = {{belief, disbelief}};
    g.patches.push_back(p);
    return g;
}

}  // namespace

TEST_CASE("scalar quantization endpoints and midpoint") {
    CHECK(quantize_mass(0.0) == 0);
    CHECK(quantize_mass(1.0) == 255);
    // 0.5 * 255 = 127.5, ties away from zero
    CHECK(quantize_mass(0.5) == 128);
    CHECK(quantize_mass(0.5) == oracle_quantize(0.5));
}

TEST_CASE("scalar quantization matches the nearest-level oracle") {
    for (int i = 0; i <= 10000; ++i) {
        const double m = i / 10000.0;
        CHECK(quantize_mass(m) == oracle_quantize(m));
    }
}

TEST_CASE("out-of-range masses are rejected") {
    CHECK_THROWS_AS(quantize_mass(-0.001), ConfigError);
    CHECK_THROWS_AS(quantize_mass(1.001), ConfigError);
    CHECK_THROWS_AS(quantize_mass(std::nan("")), ConfigError);
}

TEST_CASE("dequantization endpoints and error bound") {
    CHECK(dequantize_mass(0) == 0.0);
    CHECK(dequantize_mass(255) == 1.0);
    CHECK(dequantize_mass(128) == doctest::Approx(0.50196).epsilon(1e-4));
    CHECK(std::abs(0.5 - dequantize_mass(128)) <= kQuantMaxError);
}

TEST_CASE("round-trip error bounded by half a step (dense sweep)") {
    for (int i = 0; i <= 100000; ++i) {
        const double m = i * 1e-5;
        const double err = std::abs(dequantize_mass(quantize_mass(m)) - m);
        REQUIRE(err <= kQuantMaxError + 1e-12);
    }
}

TEST_CASE("quantize_mass is monotone nondecreasing") {
    std::uint8_t prev = 0;
    for (int i = 0; i <= 100000; ++i) {
        const std::uint8_t q = quantize_mass(i * 1e-5);
        REQUIRE(q >= prev);
        prev = q;
    }
}

TEST_CASE("all 256 levels are idempotent") {
    for (int q = 0; q <= 255; ++q) {
        REQUIRE(quantize_mass(dequantize_mass(static_cast<std::uint8_t>(q))) == q);
    }
}

TEST_CASE("grid quantization of the spec cells") {
    // (0, 0) and (1, 0) map to the exact levels.
    CHECK(quantize_grid(single_cell_grid(0.0f, 0.0f)).patches[0].cells[0] ==
          QuantizedCell{0, 0});
    CHECK(quantize_grid(single_cell_grid(1.0f, 0.0f)).patches[0].cells[0] ==
          QuantizedCell{255, 0});
    // 0.6f*255 rounds to 153, 0.4f*255 to 102; additivity already holds.
    const QuantizedCell c = quantize_grid(single_cell_grid(0.6f, 0.4f)).patches[0].cells[0];
    CHECK(c == QuantizedCell{153, 102});
    CHECK(static_cast<int>(c.belief_q) + c.disbelief_q <= 255);
    // (0.5, 0.5) rounds both masses to 128; the clamp keeps additivity.
    const QuantizedCell b = quantize_grid(single_cell_grid(0.5f, 0.5f)).patches[0].cells[0];
    CHECK(b == QuantizedCell{128, 127});
}

TEST_CASE("grid-level additivity after quantization, dense pair scan") {
    for (int i = 0; i <= 200; ++i) {
        for (int j = 0; 0.005 * i + 0.005 * j <= 1.0 && j <= 200; ++j) {
            const auto bf = static_cast<float>(0.005 * i);
            const auto df = static_cast<float>(0.005 * j);
            if (static_cast<double>(bf) + static_cast<double>(df) > 1.0) continue;
            const QuantizedCell c =
                quantize_grid(single_cell_grid(bf, df)).patches[0].cells[0];
            REQUIRE(static_cast<int>(c.belief_q) + c.disbelief_q <= 255);
        }
    }
}

TEST_CASE("dequantized grids satisfy opinion invariants for every level pair") {
    QuantizedGridMap qg;
    QuantizedPatch p;
    p.cells_per_side = 1;
    p.cells.resize(1);
    qg.patches.push_back(p);
    for (int b = 0; b <= 255; ++b) {
        for (int d = 0; b + d <= 255; ++d) {
            qg.patches[0].cells[0] = {static_cast<std::uint8_t>(b),
                                      static_cast<std::uint8_t>(d)};
            const GridMap g = dequantize_grid(qg);
            REQUIRE(opinion_valid(g.patches[0].cells[0]));
        }
    }
}

TEST_CASE("on-lattice masses round-trip exactly") {
    for (int b = 0; b <= 255; b += 3) {
        for (int d = 0; b + d <= 255; d += 7) {
            const auto bf = static_cast<float>(b / 255.0);
            const auto df = static_cast<float>(d / 255.0);
            if (static_cast<double>(bf) + static_cast<double>(df) > 1.0) continue;
            const GridMap in = single_cell_grid(bf, df);
            const GridMap out = dequantize_grid(quantize_grid(in));
            REQUIRE(out == in);
        }
    }
}

TEST_CASE("all-unknown grid round-trips identically") {
    GridMap g;
    Patch p;
    p.cells_per_side = 4;
    p.cell_size = 0.2f;
    p.cells.assign(16, BinomialOpinion{});
    g.patches.push_back(p);
    CHECK(dequantize_grid(quantize_grid(g)) == g);
}

TEST_CASE("reconstruction error bands near the additivity boundary") {
    // Belief stays within step/2; the clamped disbelief may move 3*step/2
    // inside the boundary band, never more.
    for (int i = 0; i <= 500; ++i) {
        for (int j = 0; j <= 500 - i; ++j) {
            const double b = i * 0.002;
            const double d = j * 0.002;
            const auto bf = static_cast<float>(b);
            const auto df = static_cast<float>(d);
            if (static_cast<double>(bf) + static_cast<double>(df) > 1.0) continue;
            const GridMap out = dequantize_grid(quantize_grid(single_cell_grid(bf, df)));
            const BinomialOpinion& c = out.patches[0].cells[0];
            const double berr = std::abs(c.belief - static_cast<double>(bf));
            const double derr = std::abs(c.disbelief - static_cast<double>(df));
            REQUIRE(berr <= kQuantMaxError + 1e-7);
            if (static_cast<double>(bf) + static_cast<double>(df) < 1.0 - kQuantStep) {
                REQUIRE(derr <= kQuantMaxError + 1e-7);
            } else {
                REQUIRE(derr <= 3.0 * kQuantMaxError + 1e-7);
            }
        }
    }
}

TEST_CASE("quantized payload is exactly a quarter of the normal payload") {
    GridMap g;
    for (std::uint32_t side : {3u, 16u, 160u}) {
        Patch p;
        p.cells_per_side = side;
        g.patches.push_back(p);
    }
    CHECK(payload_bytes(g, true) * 4 == payload_bytes(g, false));
}
