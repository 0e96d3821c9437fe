#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "apgm/codec.hpp"
#include "apgm/error.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/rng.hpp"
#include "apgm/wire.hpp"

using namespace apgm;

namespace {

// Independent oracle for the RLE wire layout: literal pair expansion.
Bytes oracle_rle_expand(const Bytes& pairs) {
    Bytes out;
    for (std::size_t i = 0; i + 1 < pairs.size(); i += 2) {
        for (int k = 0; k < pairs[i]; ++k) out.push_back(pairs[i + 1]);
    }
    return out;
}

Bytes random_bytes(std::uint64_t seed, std::size_t n) {
    SplitMix64 rng(seed);
    Bytes out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(rng.next());
    return out;
}

// Run-structured data: random values with geometric run lengths.
Bytes runny_bytes(std::uint64_t seed, std::size_t n) {
    SplitMix64 rng(seed);
    Bytes out;
    out.reserve(n);
    while (out.size() < n) {
        const auto value = static_cast<std::uint8_t>(rng.next_below(7));
        const std::uint64_t run = 1 + rng.next_below(400);
        for (std::uint64_t i = 0; i < run && out.size() < n; ++i) out.push_back(value);
    }
    return out;
}

Bytes corpus_payload() {
    CorpusConfig config;
    config.seed = 21;
    config.target_cells = 40000;
    const auto corpus = generate_corpus(config, 1);
    Bytes all;
    for (const Bytes& payload : pack_patch_payloads(corpus[0])) {
        all.insert(all.end(), payload.begin(), payload.end());
    }
    return all;
}

}  // namespace

TEST_CASE("rle encodes the empty input to the empty output") {
    CHECK(rle_encode({}).empty());
    CHECK(rle_decode({}).empty());
}

TEST_CASE("rle splits runs longer than 255") {
    const Bytes input(300, 0x00);
    const Bytes encoded = rle_encode(input);
    REQUIRE(encoded == Bytes{255, 0x00, 45, 0x00});
    CHECK(rle_decode(encoded) == input);
    CHECK(oracle_rle_expand(encoded) == input);
}

TEST_CASE("rle worst case doubles alternating input") {
    Bytes input;
    for (int i = 0; i < 500; ++i) input.push_back(i % 2 ? 0x01 : 0x00);
    const Bytes encoded = rle_encode(input);
    CHECK(encoded.size() == 2 * input.size());
    CHECK(rle_decode(encoded) == input);
}

TEST_CASE("rle decode expands count-value pairs") {
    const Bytes pairs{4, 'A', 3, 'B'};
    const Bytes expected{'A', 'A', 'A', 'A', 'B', 'B', 'B'};
    CHECK(rle_decode(pairs) == expected);
    CHECK(oracle_rle_expand(pairs) == expected);
    CHECK(rle_encode(expected) == pairs);
}

TEST_CASE("rle rejects malformed streams") {
    CHECK_THROWS_AS(rle_decode(Bytes{4, 'A', 3}), IntegrityError);
    CHECK_THROWS_AS(rle_decode(Bytes{0, 'A'}), IntegrityError);
}

TEST_CASE("rle expansion bound, equality only without runs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Bytes input = runny_bytes(seed, 4096);
        const Bytes encoded = rle_encode(input);
        REQUIRE(encoded.size() <= 2 * input.size());
        bool has_run = false;
        for (std::size_t i = 1; i < input.size(); ++i) {
            if (input[i] == input[i - 1]) {
                has_run = true;
                break;
            }
        }
        REQUIRE((encoded.size() == 2 * input.size()) == !has_run);
        REQUIRE(rle_decode(encoded) == input);
    }
}

TEST_CASE("identity codec copies verbatim") {
    const Bytes input = random_bytes(1, 1000);
    const CompressedBlock block = compress(CodecSpec::none(), input);
    CHECK(block.data == input);
    CHECK(block.uncompressed_len == input.size());
    CHECK(decompress(block) == input);
}

TEST_CASE("rlz4 collapses long runs by orders of magnitude") {
    const Bytes input(10000, 0x00);
    const CompressedBlock block = compress(CodecSpec::rlz4(1), input);
    CHECK(block.data.size() < input.size() / 100);
    CHECK(decompress(block) == input);
}

TEST_CASE("rlz4 equals lz4 over the rle stream") {
    const Bytes input = runny_bytes(5, 100000);
    for (std::int32_t accel : {1, 8, 64}) {
        const CompressedBlock rlz4 = compress(CodecSpec::rlz4(accel), input);
        const CompressedBlock lz4 = compress(CodecSpec::lz4(accel), rle_encode(input));
        REQUIRE(rlz4.data == lz4.data);
    }
}

TEST_CASE("zstd outcompresses lz4 on a synthetic corpus payload") {
    const Bytes payload = corpus_payload();
    const auto zstd_size = compress(CodecSpec::zstd(3), payload).data.size();
    const auto lz4_size = compress(CodecSpec::lz4(1), payload).data.size();
    CHECK(zstd_size < lz4_size);
}

TEST_CASE("losslessness across every algorithm and parameter sample") {
    const Bytes corpus = corpus_payload();
    std::vector<Bytes> inputs = {
        {}, {0x42}, random_bytes(2, 1 << 20), runny_bytes(3, 1 << 18),
        Bytes(corpus.begin(), corpus.begin() + std::min<std::size_t>(corpus.size(), 1 << 19)),
    };
    std::vector<CodecSpec> specs = {
        CodecSpec::none(),   CodecSpec::rle(),      CodecSpec::lz4(1),
        CodecSpec::lz4(64),  CodecSpec::lz4(4096),  CodecSpec::rlz4(1),
        CodecSpec::rlz4(16), CodecSpec::zstd(-100), CodecSpec::zstd(-5),
        CodecSpec::zstd(3),  CodecSpec::zstd(10),
    };
    for (const CodecSpec& spec : specs) {
        for (const Bytes& input : inputs) {
            const CompressedBlock block = compress(spec, input);
            REQUIRE(decompress(block) == input);
        }
    }
}

TEST_CASE("losslessness holds at 16 MiB") {
    const Bytes input = runny_bytes(9, 16 << 20);
    for (const CodecSpec& spec :
         {CodecSpec::rle(), CodecSpec::lz4(1), CodecSpec::zstd(1), CodecSpec::rlz4(4)}) {
        REQUIRE(decompress(compress(spec, input)) == input);
    }
    PngLayout layout{4096};
    const CompressedBlock png = compress(CodecSpec::png(), input, layout);
    REQUIRE(decompress(png) == input);
}

TEST_CASE("png round-trips an 8-bit grayscale patch payload") {
    // Quantized patch payload: 2 bytes per cell, one row per grid row.
    const std::uint32_t side = 64;
    Bytes payload = runny_bytes(4, side * side * 2);
    const CompressedBlock block = compress(CodecSpec::png(), payload, PngLayout{side * 2});
    CHECK(decompress(block) == payload);
    CHECK(block.data.size() < payload.size());
    // PNG signature
    REQUIRE(block.data.size() > 8);
    CHECK(block.data[0] == 0x89);
    CHECK(block.data[1] == 'P');
}

TEST_CASE("png requires a stride that divides the payload") {
    const Bytes input(100, 0x7);
    CHECK_THROWS_AS(compress(CodecSpec::png(), input), ConfigError);
    CHECK_THROWS_AS(compress(CodecSpec::png(), input, PngLayout{33}), ConfigError);
}

TEST_CASE("corrupted streams are detected") {
    const Bytes input = runny_bytes(6, 200000);

    CompressedBlock zstd = compress(CodecSpec::zstd(3), input);
    zstd.data.resize(zstd.data.size() / 2);  // truncated frame
    CHECK_THROWS_AS(decompress(zstd), IntegrityError);

    zstd = compress(CodecSpec::zstd(3), input);
    zstd.data[zstd.data.size() / 2] ^= 0x01;  // checksum path
    CHECK_THROWS_AS(decompress(zstd), IntegrityError);

    CompressedBlock lz4 = compress(CodecSpec::lz4(1), input);
    lz4.data[lz4.data.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(decompress(lz4), IntegrityError);

    CompressedBlock lz4_short = compress(CodecSpec::lz4(1), input);
    lz4_short.data.resize(lz4_short.data.size() - 5);
    CHECK_THROWS_AS(decompress(lz4_short), IntegrityError);

    CompressedBlock png = compress(CodecSpec::png(), Bytes(4096, 0x10), PngLayout{64});
    png.data[png.data.size() / 2] ^= 0xFF;
    CHECK_THROWS_AS(decompress(png), IntegrityError);

    // Declared length must match for the bare copy codec as well.
    CompressedBlock none = compress(CodecSpec::none(), input);
    none.uncompressed_len += 1;
    CHECK_THROWS_AS(decompress(none), IntegrityError);
}

TEST_CASE("illegal parameters are configuration errors") {
    CHECK_THROWS_AS(validate_spec(CodecSpec{Algorithm::LZ4, 0}), ConfigError);
    CHECK_THROWS_AS(validate_spec(CodecSpec{Algorithm::LZ4, -1}), ConfigError);
    CHECK_THROWS_AS(validate_spec(CodecSpec{Algorithm::Zstd, 11}), ConfigError);
    CHECK_THROWS_AS(validate_spec(CodecSpec{Algorithm::Zstd, -101}), ConfigError);
    CHECK_THROWS_AS(validate_spec(CodecSpec{Algorithm::None, 1}), ConfigError);
    CHECK_THROWS_AS(validate_spec(CodecSpec{Algorithm::RLE, 2}), ConfigError);
    CHECK_THROWS_AS(validate_spec(CodecSpec{Algorithm::PNG, -3}), ConfigError);
    CHECK_NOTHROW(validate_spec(CodecSpec::zstd(-100)));
    CHECK_NOTHROW(validate_spec(CodecSpec::zstd(10)));
    CHECK_NOTHROW(validate_spec(CodecSpec::lz4(4096)));
}

TEST_CASE("algorithm names round-trip") {
    for (Algorithm a : {Algorithm::None, Algorithm::RLE, Algorithm::LZ4, Algorithm::RLZ4,
                        Algorithm::Zstd, Algorithm::PNG}) {
        CHECK(algorithm_from_name(algorithm_name(a)) == a);
    }
    CHECK_THROWS_AS(algorithm_from_name("mars"), ConfigError);
    CHECK(spec_label(CodecSpec::zstd(-7)) == "zstd:-7");
    CHECK(spec_label(CodecSpec::none()) == "none");
}
