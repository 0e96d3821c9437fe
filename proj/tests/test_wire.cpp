#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "apgm/error.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/quantize.hpp"
#include "apgm/wire.hpp"

using namespace apgm;

namespace {

// Reference grid for golden fixtures: fixed literal values, exactly
// representable masses, mixed patch sizes.
GridMap fixture_grid() {
    GridMap g;
    g.base_rate = 0.25f;
    g.timestamp_ns = 1234567890123456789ull;
    g.frame_id = "map";

    Patch p0;
    p0.patch_id = 3;
    p0.origin_x = 0.0;
    p0.origin_y = -1.5;
    p0.cell_size = 0.1f;
    p0.cells_per_side = 4;
    for (int i = 0; i < 16; ++i) {
        p0.cells.push_back({static_cast<float>(i % 8) / 16.0f,
                            static_cast<float>((i * 3) % 8) / 16.0f});
    }
    g.patches.push_back(p0);

    Patch p1;
    p1.patch_id = 7;
    p1.origin_x = 1.6;
    p1.origin_y = -3.2;
    p1.cell_size = 0.2f;
    p1.cells_per_side = 2;
    p1.cells = {{0.0f, 0.0f}, {1.0f, 0.0f}, {0.0f, 1.0f}, {0.5f, 0.25f}};
    g.patches.push_back(p1);
    return g;
}

GridMap synthetic_frame(std::uint64_t seed = 17) {
    CorpusConfig config;
    config.seed = seed;
    config.target_cells = 40000;
    return generate_corpus(config, 1)[0];
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing fixture ", path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct GoldenCase {
    const char* name;
    CodecSpec spec;
    WireMode mode;
    bool quantized;
};

const GoldenCase kGoldenCases[] = {
    {"none_pw", CodecSpec::none(), WireMode::PatchWise, false},
    {"rle_pw", CodecSpec::rle(), WireMode::PatchWise, false},
    {"lz4a1_pw", CodecSpec::lz4(1), WireMode::PatchWise, false},
    {"rlz4a1_pw", CodecSpec::rlz4(1), WireMode::PatchWise, false},
    {"zstd3_pw", CodecSpec::zstd(3), WireMode::PatchWise, false},
    {"png_pw", CodecSpec::png(), WireMode::PatchWise, false},
    {"none_full", CodecSpec::none(), WireMode::Full, false},
    {"zstd3_full", CodecSpec::zstd(3), WireMode::Full, false},
    {"none_pw_q", CodecSpec::none(), WireMode::PatchWise, true},
    {"zstd3_pw_q", CodecSpec::zstd(3), WireMode::PatchWise, true},
    {"png_pw_q", CodecSpec::png(), WireMode::PatchWise, true},
};

WireMessage encode_case(const GridMap& grid, const GoldenCase& c) {
    return c.mode == WireMode::PatchWise ? encode_patchwise(grid, c.spec, c.quantized)
                                         : encode_full(grid, c.spec, c.quantized);
}

}  // namespace

TEST_CASE("round trip across codecs, modes and quantization") {
    const GridMap small = fixture_grid();
    const GridMap frame = synthetic_frame();
    const std::vector<CodecSpec> specs = {CodecSpec::none(),  CodecSpec::rle(),
                                          CodecSpec::lz4(1),  CodecSpec::lz4(512),
                                          CodecSpec::rlz4(2), CodecSpec::zstd(-30),
                                          CodecSpec::zstd(5), CodecSpec::png()};
    for (const GridMap* grid : {&small, &frame}) {
        for (const CodecSpec& spec : specs) {
            for (bool quantized : {false, true}) {
                // Patch-wise
                const WireMessage pw = encode_patchwise(*grid, spec, quantized);
                const Decoded d = decode(pw);
                CHECK(d.mode == WireMode::PatchWise);
                CHECK(d.spec == spec);
                CHECK(d.quantized == quantized);
                if (quantized) {
                    REQUIRE(d.qgrid() == quantize_grid(*grid));
                } else {
                    REQUIRE(d.grid() == *grid);
                }

                // Full (not defined for PNG)
                if (spec.algorithm == Algorithm::PNG) continue;
                const WireMessage full = encode_full(*grid, spec, quantized);
                const Decoded df = decode(full);
                CHECK(df.mode == WireMode::Full);
                CHECK(df.spec == spec);
                if (quantized) {
                    REQUIRE(df.qgrid() == quantize_grid(*grid));
                } else {
                    REQUIRE(df.grid() == *grid);
                }
            }
        }
    }
}

TEST_CASE("encoding is deterministic") {
    const GridMap frame = synthetic_frame(23);
    for (const GoldenCase& c : kGoldenCases) {
        CHECK(encode_case(frame, c).bytes == encode_case(frame, c).bytes);
    }
}

TEST_CASE("message magics distinguish the modes") {
    const GridMap g = fixture_grid();
    const WireMessage pw = encode_patchwise(g, CodecSpec::none(), false);
    const WireMessage full = encode_full(g, CodecSpec::none(), false);
    CHECK(std::memcmp(pw.bytes.data(), "APGM", 4) == 0);
    CHECK(std::memcmp(full.bytes.data(), "APGC", 4) == 0);
}

TEST_CASE("empty grid encodes to a header-only message") {
    GridMap g;
    g.base_rate = 0.75f;
    g.frame_id = "e";
    const WireMessage msg = encode_patchwise(g, CodecSpec::zstd(3), false);
    const SizeBreakdown breakdown = message_size_breakdown(msg.bytes);
    CHECK(breakdown.patch_headers == 0);
    CHECK(breakdown.payload == 0);
    CHECK(breakdown.total() == msg.bytes.size());
    const Decoded d = decode(msg);
    CHECK(d.grid().patches.empty());
    CHECK(d.grid().base_rate == 0.75f);
}

TEST_CASE("full-message PNG is rejected") {
    CHECK_THROWS_AS(encode_full(fixture_grid(), CodecSpec::png(), false), UnsupportedError);
}

TEST_CASE("all-unknown quantized patch collapses under RLE") {
    GridMap g;
    Patch p;
    p.cells_per_side = 32;
    p.cell_size = 0.1f;
    p.cells.assign(1024, BinomialOpinion{});
    g.patches.push_back(p);
    const WireMessage msg = encode_patchwise(g, CodecSpec::rle(), true);
    const std::uint64_t cells = 1024;
    const std::uint64_t bound = 2 * ((cells * 2 + 254) / 255) + 4;
    CHECK(message_size_breakdown(msg.bytes).payload <= bound);
    CHECK(decode(msg).qgrid() == quantize_grid(g));
}

TEST_CASE("patch-wise lz4 beats an uncompressed full message") {
    const GridMap frame = synthetic_frame(29);
    const WireMessage pw = encode_patchwise(frame, CodecSpec::lz4(1), false);
    const WireMessage full_none = encode_full(frame, CodecSpec::none(), false);
    CHECK(pw.bytes.size() < full_none.bytes.size());
}

TEST_CASE("full and patch-wise compressed sizes agree within 15%") {
    const GridMap frame = synthetic_frame(31);
    for (const CodecSpec& spec : {CodecSpec::lz4(1), CodecSpec::zstd(3)}) {
        const auto pw = static_cast<double>(encode_patchwise(frame, spec, false).bytes.size());
        const auto full = static_cast<double>(encode_full(frame, spec, false).bytes.size());
        CHECK(std::abs(pw - full) / full < 0.15);
    }
}

TEST_CASE("serialization work follows compressed vs uncompressed bytes") {
    const GridMap frame = synthetic_frame(37);
    // Patch-wise serialization handles the compressed payloads; full-message
    // serialization handles the raw cells. The byte counts carry the claim.
    const WireMessage pw = encode_patchwise(frame, CodecSpec::zstd(3), false);
    const std::uint64_t patchwise_ser_bytes = pw.bytes.size();
    const std::uint64_t full_ser_bytes = serialize_inner(frame).size();
    CHECK(patchwise_ser_bytes < full_ser_bytes / 2);
}

TEST_CASE("size accounting is exact") {
    const GridMap frame = synthetic_frame(41);
    for (const CodecSpec& spec : {CodecSpec::none(), CodecSpec::zstd(3)}) {
        const WireMessage msg = encode_patchwise(frame, spec, false);
        const SizeBreakdown b = message_size_breakdown(msg.bytes);
        CHECK(b.total() == msg.bytes.size());
        CHECK(b.fixed_header == 28 + frame.frame_id.size());
        CHECK(b.patch_headers == 36 * frame.patches.size());
    }
}

TEST_CASE("corrupted and malformed messages raise typed errors") {
    const GridMap g = fixture_grid();

    WireMessage msg = encode_patchwise(g, CodecSpec::zstd(3), false);
    Bytes flipped = msg.bytes;
    flipped[flipped.size() - 3] ^= 0x40;  // inside the last compressed payload
    CHECK_THROWS_AS(decode(flipped), IntegrityError);

    Bytes bad_magic = msg.bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode(bad_magic), FormatError);

    Bytes bad_version = msg.bytes;
    bad_version[4] = 99;
    CHECK_THROWS_AS(decode(bad_version), FormatError);

    Bytes truncated = msg.bytes;
    truncated.resize(truncated.size() - 1);
    CHECK_THROWS_AS(decode(truncated), IntegrityError);

    // Invalid cell content: belief 2.0 in a codec-None payload.
    GridMap bad = g;
    bad.patches.resize(1);
    bad.patches[0].cells_per_side = 1;
    bad.patches[0].cells = {{0.25f, 0.25f}};
    WireMessage none_msg = encode_patchwise(bad, CodecSpec::none(), false);
    const float two = 2.0f;
    std::memcpy(none_msg.bytes.data() + none_msg.bytes.size() - 8, &two, 4);
    CHECK_THROWS_AS(decode(none_msg), DataError);
}

TEST_CASE("container files round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "apgm_wire_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "corpus.apgm").string();

    CorpusConfig config;
    config.seed = 47;
    config.target_cells = 40000;
    const auto corpus = generate_corpus(config, 3);
    write_corpus_file(path, corpus);
    CHECK(read_corpus_file(path) == corpus);

    // Mixed-message container survives a raw read.
    std::vector<WireMessage> mixed = {
        encode_patchwise(corpus[0], CodecSpec::zstd(3), true),
        encode_full(corpus[1], CodecSpec::lz4(4), false),
    };
    const std::string mixed_path = (dir / "mixed.apgm").string();
    write_container(mixed_path, mixed);
    const auto raw = read_container_raw(mixed_path);
    REQUIRE(raw.size() == 2);
    CHECK(decode(raw[0]).qgrid() == quantize_grid(corpus[0]));
    CHECK(decode(raw[1]).grid() == corpus[1]);

    std::filesystem::remove_all(dir);
}

TEST_CASE("golden fixtures decode to the reference grid and re-encode bit-exactly") {
    const GridMap grid = fixture_grid();
    const QuantizedGridMap qgrid = quantize_grid(grid);
    const std::filesystem::path dir = APGM_GOLDEN_DIR;

    if (std::getenv("APGM_REGEN_GOLDEN") != nullptr) {
        std::filesystem::create_directories(dir);
        for (const GoldenCase& c : kGoldenCases) {
            const WireMessage msg = encode_case(grid, c);
            std::ofstream out(dir / (std::string(c.name) + ".bin"), std::ios::binary);
            out.write(reinterpret_cast<const char*>(msg.bytes.data()),
                      static_cast<std::streamsize>(msg.bytes.size()));
        }
        MESSAGE("golden fixtures regenerated");
    }

    for (const GoldenCase& c : kGoldenCases) {
        const Bytes bytes = read_file(dir / (std::string(c.name) + ".bin"));
        const Decoded d = decode(bytes);
        CHECK(d.mode == c.mode);
        CHECK(d.spec == c.spec);
        CHECK(d.quantized == c.quantized);
        if (c.quantized) {
            REQUIRE(d.qgrid() == qgrid);
        } else {
            REQUIRE(d.grid() == grid);
        }
        const WireMessage re = encode_case(grid, c);
        REQUIRE_MESSAGE(re.bytes == bytes, "re-encode differs for ", c.name);
    }
}
