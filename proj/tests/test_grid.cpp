#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apgm/codec.hpp"
#include "apgm/error.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/wire.hpp"

using namespace apgm;

namespace {

CorpusConfig small_config(std::uint64_t seed = 1) {
    CorpusConfig config;
    config.seed = seed;
    config.target_cells = 40000;
    return config;
}

}  // namespace

TEST_CASE("total_cells on empty and single-patch maps") {
    GridMap empty;
    CHECK(total_cells(empty) == 0);

    GridMap one;
    Patch p;
    p.cells_per_side = 160;
    one.patches.push_back(p);
    CHECK(total_cells(one) == 25600);
}

TEST_CASE("payload_bytes matches the 8-byte and 2-byte cell layouts") {
    GridMap g;
    for (std::uint32_t side : {500u, 300u, 100u}) {  // 350 000 cells total
        Patch p;
        p.cells_per_side = side;
        g.patches.push_back(p);
    }
    REQUIRE(total_cells(g) == 350000);
    CHECK(payload_bytes(g, false) == 2800000);
    CHECK(payload_bytes(g, true) == 700000);
    CHECK(payload_bytes(GridMap{}, false) == 0);
    CHECK(payload_bytes(GridMap{}, true) == 0);
}

TEST_CASE("generation is deterministic for a given seed") {
    const auto a = generate_corpus(small_config(), 2);
    const auto b = generate_corpus(small_config(), 2);
    REQUIRE(a.size() == 2);
    CHECK(a == b);
    CHECK(a[0] != a[1]);  // frames differ from each other
    CHECK(generate_corpus(small_config(99), 1) != std::vector<GridMap>{a[0]});
}

TEST_CASE("unknown-only mix produces all-zero cells") {
    CorpusConfig config = small_config();
    config.occupancy_mix = {0.0, 0.0, 1.0, 0.0};
    const auto corpus = generate_corpus(config, 1);
    for (const Patch& p : corpus[0].patches) {
        for (const BinomialOpinion& c : p.cells) {
            REQUIRE(c == BinomialOpinion{});
        }
    }
}

TEST_CASE("default config approximates the target cell count") {
    CorpusConfig config;
    config.seed = 7;
    const auto corpus = generate_corpus(config, 1);
    const auto cells = total_cells(corpus[0]);
    CHECK(cells >= 315000);
    CHECK(cells <= 385000);
}

TEST_CASE("every generated cell satisfies the opinion invariants exactly") {
    const auto corpus = generate_corpus(small_config(3), 2);
    for (const GridMap& frame : corpus) {
        std::uint64_t counted = 0;
        for (const Patch& p : frame.patches) {
            REQUIRE(p.cells.size() ==
                    static_cast<std::size_t>(p.cells_per_side) * p.cells_per_side);
            REQUIRE(p.cell_size > 0.0f);
            for (const BinomialOpinion& c : p.cells) {
                REQUIRE(opinion_valid(c));
            }
            counted += p.cells.size();
        }
        CHECK(counted == total_cells(frame));
        CHECK(payload_bytes(frame, false) == counted * 8);
    }
}

TEST_CASE("patch ids are unique and resolutions come from the config") {
    const auto corpus = generate_corpus(small_config(5), 1);
    std::vector<std::uint64_t> ids;
    for (const Patch& p : corpus[0].patches) {
        ids.push_back(p.patch_id);
        const float cs = p.cell_size;
        CHECK((cs == 0.10f || cs == 0.20f || cs == 0.40f));
    }
    std::sort(ids.begin(), ids.end());
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
}

TEST_CASE("RLE compresses every generated frame") {
    const auto corpus = generate_corpus(small_config(11), 3);
    for (const GridMap& frame : corpus) {
        std::uint64_t raw = 0;
        std::uint64_t encoded = 0;
        for (const Bytes& payload : pack_patch_payloads(frame)) {
            raw += payload.size();
            encoded += rle_encode(payload).size();
        }
        REQUIRE(encoded < raw);
    }
}

TEST_CASE("invalid configurations are rejected") {
    CorpusConfig config = small_config();
    config.occupancy_mix = {0.5, 0.5, 0.5, -0.5};
    CHECK_THROWS_AS(generate_corpus(config, 1), ConfigError);

    config = small_config();
    config.occupancy_mix = {0.5, 0.5, 0.1, 0.0};  // sums to 1.1
    CHECK_THROWS_AS(generate_corpus(config, 1), ConfigError);

    config = small_config();
    config.resolutions = {0.4, 0.2};  // not increasing
    CHECK_THROWS_AS(generate_corpus(config, 1), ConfigError);

    config = small_config();
    CHECK_THROWS_AS(generate_corpus(config, 0), ConfigError);

    // 16 m patches cannot hit 1000 cells within 10%.
    config = small_config();
    config.target_cells = 1000;
    CHECK_THROWS_AS(generate_corpus(config, 1), ConfigError);
}
