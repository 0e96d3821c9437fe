#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "apgm/error.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/latency.hpp"

using namespace apgm;

namespace {

std::vector<GridMap> small_corpus(std::uint64_t seed = 51, std::uint64_t frames = 2) {
    CorpusConfig config;
    config.seed = seed;
    config.target_cells = 40000;
    return generate_corpus(config, frames);
}

// Synthetic profiles with dictated compute times and sizes; lets selection
// logic be tested without any wall clock involved.
std::vector<ParamProfile> synthetic_profiles(Algorithm algorithm,
                                             const std::vector<std::int32_t>& params,
                                             const std::vector<double>& compute_s,
                                             const std::vector<double>& size_bytes) {
    std::vector<ParamProfile> profiles;
    for (std::size_t i = 0; i < params.size(); ++i) {
        ParamProfile p;
        p.spec = CodecSpec{algorithm, params[i]};
        p.t_comp = compute_s[i];
        p.mean_size_bytes = size_bytes[i];
        profiles.push_back(p);
    }
    return profiles;
}

}  // namespace

TEST_CASE("transmission time is the exact size-to-bandwidth ratio") {
    CHECK(transmission_seconds(1250000, 10e6) == 1.0);
    CHECK(transmission_seconds(0, 10e6) == 0.0);
    CHECK_THROWS_AS(transmission_seconds(1, 0.0), ConfigError);
    // doubling B halves t_trans, exactly
    for (std::uint64_t s : {1ull, 12345ull, 2800000ull}) {
        CHECK(transmission_seconds(s, 2e7) == 0.5 * transmission_seconds(s, 1e7));
    }
}

TEST_CASE("codec-None payload transmission ratio is exactly one quarter") {
    for (const GridMap& frame : small_corpus()) {
        const double quantized = transmission_seconds(payload_bytes(frame, true), 10e6);
        const double normal = transmission_seconds(payload_bytes(frame, false), 10e6);
        REQUIRE(quantized / normal == 0.25);
    }
}

TEST_CASE("time_pipeline satisfies the five-component identity") {
    const auto corpus = small_corpus();
    TimingOptions opts;
    opts.repetitions = 3;
    for (WireMode mode : {WireMode::PatchWise, WireMode::Full}) {
        for (bool quantized : {false, true}) {
            const E2ETimings t =
                time_pipeline(corpus[0], CodecSpec::zstd(1), quantized, mode, 1e8, opts);
            CHECK(t.total() == t.t_comp + t.t_ser + t.t_trans + t.t_deser + t.t_decomp);
            CHECK(t.t_comp >= 0.0);
            CHECK(t.t_ser >= 0.0);
            CHECK(t.t_deser >= 0.0);
            CHECK(t.t_decomp >= 0.0);
            CHECK(t.size_bytes > 0);
            CHECK(t.t_trans == transmission_seconds(t.size_bytes, 1e8));
        }
    }
}

TEST_CASE("pipeline size matches the real encoder output") {
    const auto corpus = small_corpus();
    const E2ETimings t =
        time_pipeline(corpus[0], CodecSpec::lz4(1), false, WireMode::PatchWise, 1e7,
                      TimingOptions{1});
    CHECK(t.size_bytes == encode_patchwise(corpus[0], CodecSpec::lz4(1), false).bytes.size());
}

TEST_CASE("sweep returns deterministic ordering with nonnegative means") {
    const auto corpus = small_corpus();
    const std::vector<CodecSpec> specs = {CodecSpec::none(), CodecSpec::lz4(1),
                                          CodecSpec::zstd(1)};
    const auto results =
        sweep(corpus, specs, {false, true}, WireMode::PatchWise, 1e8, TimingOptions{1});
    REQUIRE(results.size() == 6);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        CHECK(results[2 * i].spec == specs[i]);
        CHECK(results[2 * i].quantized == false);
        CHECK(results[2 * i + 1].quantized == true);
        CHECK(results[2 * i].mean_size_bytes > 0.0);
    }
    // quantized payloads shrink the message for the identity codec
    CHECK(results[1].mean_size_bytes < results[0].mean_size_bytes);
}

TEST_CASE("zstd compression dominates decompression at positive levels") {
    const auto corpus = small_corpus(52, 2);
    const ParamProfile p =
        measure_profile(corpus, CodecSpec::zstd(3), false, WireMode::PatchWise,
                        TimingOptions{5});
    CHECK(p.t_comp > p.t_decomp);
}

TEST_CASE("parameter grids match the benchmark defaults") {
    const auto lz4 = lz4_param_grid();
    REQUIRE(lz4.size() == 13);
    CHECK(lz4.front() == 1);
    CHECK(lz4.back() == 4096);

    const auto zstd = zstd_param_grid();
    CHECK(std::count(zstd.begin(), zstd.end(), 0) == 0);
    CHECK(std::count(zstd.begin(), zstd.end(), -100) == 1);
    CHECK(std::count(zstd.begin(), zstd.end(), -55) == 0);
    CHECK(std::count(zstd.begin(), zstd.end(), 10) == 1);
    CHECK(std::count(zstd.begin(), zstd.end(), 7) == 1);
}

TEST_CASE("optimal selection minimizes and tie-breaks toward speed") {
    // LZ4-style: bigger params compress faster but bigger.
    const auto lz4 = synthetic_profiles(Algorithm::LZ4, {1, 2, 4}, {0.030, 0.020, 0.010},
                                        {1.0e6, 1.2e6, 1.5e6});
    // At very low bandwidth size wins.
    CHECK(optimal_from_profiles(lz4, 1e6).param == 1);
    // At very high bandwidth compute wins.
    CHECK(optimal_from_profiles(lz4, 1e12).param == 4);

    // Tie region: totals within 2% tie and resolve to the higher acceleration.
    const auto tied = synthetic_profiles(Algorithm::LZ4, {1, 2, 4}, {0.100, 0.1005, 0.101},
                                         {1.0, 1.0, 1.0});
    CHECK(optimal_from_profiles(tied, 1e12).param == 4);

    // Zstd ties resolve to the lower level.
    const auto zstd = synthetic_profiles(Algorithm::Zstd, {1, 5, 9}, {0.010, 0.0101, 0.0102},
                                         {1.0, 1.0, 1.0});
    CHECK(optimal_from_profiles(zstd, 1e12).param == 1);
}

TEST_CASE("argmin is invariant under uniform scaling of measured components") {
    const auto base = synthetic_profiles(Algorithm::LZ4, {1, 2, 4, 8},
                                         {0.040, 0.025, 0.015, 0.012},
                                         {1.0e6, 1.15e6, 1.4e6, 1.9e6});
    for (double bandwidth : {1e6, 1e8, 1e9, 1e11}) {
        for (double k : {0.5, 3.0, 10.0}) {
            auto scaled = base;
            for (ParamProfile& p : scaled) {
                p.t_comp *= k;
                p.t_ser *= k;
                p.t_deser *= k;
                p.t_decomp *= k;
                p.mean_size_bytes *= k;
            }
            CHECK(optimal_from_profiles(scaled, bandwidth).param ==
                  optimal_from_profiles(base, bandwidth).param);
        }
    }
}

TEST_CASE("synthetic crossover is found at the analytic switch point") {
    // One param per algorithm: totals cross where
    // c_z - c_l == (S_l - S_z) * 8 / B  =>  B* = 8 MB*s terms below.
    const auto lz4 = synthetic_profiles(Algorithm::LZ4, {1}, {0.010}, {1.0e6});
    const auto zstd = synthetic_profiles(Algorithm::Zstd, {1}, {0.030}, {0.5e6});
    // B* = (1.0e6 - 0.5e6) * 8 / 0.020 = 2e8
    const CrossoverResult r = crossover_from_profiles(lz4, zstd);
    REQUIRE(r.found);
    CHECK(r.bandwidth_bps == doctest::Approx(2e8).epsilon(0.01));

    // Dominant algorithm reported when no switch exists.
    const auto fast_small = synthetic_profiles(Algorithm::LZ4, {1}, {0.001}, {0.4e6});
    const CrossoverResult none = crossover_from_profiles(fast_small, zstd);
    CHECK_FALSE(none.found);
    CHECK(none.dominant == Algorithm::LZ4);
}

TEST_CASE("summarize computes population statistics") {
    const Stats one = summarize({5.0});
    CHECK(one.mean == 5.0);
    CHECK(one.std == 0.0);
    CHECK(one.min == 5.0);
    CHECK(one.max == 5.0);

    const Stats two = summarize({1.0, 3.0});
    CHECK(two.mean == 2.0);
    CHECK(two.std == 1.0);
    CHECK(two.min == 1.0);
    CHECK(two.max == 3.0);

    CHECK_THROWS_AS(summarize({}), ConfigError);
}

TEST_CASE("sweep CSV has the fixed column order") {
    const auto corpus = small_corpus();
    const auto results =
        sweep(corpus, {CodecSpec::none()}, {false}, WireMode::PatchWise, 1e7, TimingOptions{1});
    std::ostringstream out;
    write_sweep_csv(out, results);
    const std::string csv = out.str();
    CHECK(csv.rfind("spec,param,quantized,mode,t_comp,t_ser,t_trans,t_deser,t_decomp,total,"
                    "size_bytes\n",
                    0) == 0);
    CHECK(csv.find("none,0,0,patchwise,") != std::string::npos);
}
