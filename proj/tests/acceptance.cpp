// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Measured criteria use corpus-mean profiles with per-stage medians;
// analytic criteria are exact.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "apgm/codec.hpp"
#include "apgm/error.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/latency.hpp"
#include "apgm/quantize.hpp"
#include "apgm/rng.hpp"
#include "apgm/transport.hpp"
#include "apgm/wire.hpp"

using namespace apgm;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d. %-28s %s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<GridMap> make_corpus(std::uint64_t seed, std::uint64_t target_cells,
                                 std::uint64_t frames) {
    CorpusConfig config;
    config.seed = seed;
    config.target_cells = target_cells;
    return generate_corpus(config, frames);
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

// ---------------------------------------------------------------- criteria

void criterion_1_quantizer_bound() {
    const double t0 = now_s();
    bool pass = true;
    double worst = 0.0;
    for (long i = 0; i <= 100000; ++i) {
        const double m = static_cast<double>(i) * 1e-5;
        const double err = std::abs(dequantize_mass(quantize_mass(m)) - m);
        worst = std::max(worst, err);
        if (err > 1.0 / 510.0 + 1e-9) pass = false;
    }
    for (int q = 0; q <= 255; ++q) {
        if (quantize_mass(dequantize_mass(static_cast<std::uint8_t>(q))) != q) pass = false;
    }
    const double elapsed = now_s() - t0;
    pass = pass && elapsed < 1.0;
    report(1, "quantizer bound", pass,
           "max |err| = " + fmt(worst) + " <= 1/510, 256 levels idempotent, " +
               fmt(elapsed, 2) + " s");
}

void criterion_2_memory_reduction() {
    SplitMix64 rng(424242);
    bool pass = true;
    for (int g = 0; g < 100; ++g) {
        GridMap grid;
        const std::uint64_t patches = 1 + rng.next_below(6);
        for (std::uint64_t p = 0; p < patches; ++p) {
            Patch patch;
            patch.cells_per_side = static_cast<std::uint32_t>(1 + rng.next_below(300));
            grid.patches.push_back(patch);
        }
        const auto q = static_cast<double>(payload_bytes(grid, true));
        const auto n = static_cast<double>(payload_bytes(grid, false));
        if (q / n != 0.25) pass = false;
    }
    report(2, "memory reduction 75%", pass, "quantized/normal payload == 0.25 on 100 grids");
}

void criterion_3_losslessness(const std::vector<GridMap>& corpus) {
    const double t0 = now_s();
    const std::vector<CodecSpec> specs = {
        CodecSpec::none(),   CodecSpec::rle(),     CodecSpec::lz4(1),  CodecSpec::lz4(512),
        CodecSpec::rlz4(1),  CodecSpec::zstd(-30), CodecSpec::zstd(3), CodecSpec::zstd(10),
        CodecSpec::png(),
    };
    bool pass = true;
    std::string failure;
    for (const CodecSpec& spec : specs) {
        for (bool quantized : {false, true}) {
            for (const GridMap& frame : corpus) {
                const WireMessage pw = encode_patchwise(frame, spec, quantized);
                const Decoded d = decode(pw);
                const bool ok = quantized ? d.qgrid() == quantize_grid(frame)
                                          : d.grid() == frame;
                if (!ok) {
                    pass = false;
                    failure = spec_label(spec) + " patchwise";
                }
                if (spec.algorithm == Algorithm::PNG) continue;
                const WireMessage full = encode_full(frame, spec, quantized);
                const Decoded df = decode(full);
                const bool okf = quantized ? df.qgrid() == quantize_grid(frame)
                                           : df.grid() == frame;
                if (!okf) {
                    pass = false;
                    failure = spec_label(spec) + " full";
                }
            }
            if (!pass) break;
        }
        if (!pass) break;
    }
    const double elapsed = now_s() - t0;
    pass = pass && elapsed < 300.0;
    report(3, "losslessness", pass,
           pass ? "9 codecs x modes x 50 frames bit-exact, " + fmt(elapsed, 3) + " s"
                : "first failure: " + failure);
}

void criterion_4_transmission_ratio(const std::vector<GridMap>& corpus) {
    bool pass = true;
    for (double bandwidth : {10e6, 1e9}) {
        for (const GridMap& frame : corpus) {
            const double q = transmission_seconds(payload_bytes(frame, true), bandwidth);
            const double n = transmission_seconds(payload_bytes(frame, false), bandwidth);
            if (q / n != 0.25) pass = false;
        }
    }
    report(4, "transmission ratio 1/4", pass,
           "codec-None payload t_trans ratio == 0.25 exactly on every frame");
}

struct ProfileBundle {
    std::vector<ParamProfile> lz4_n, lz4_q, zstd_n, zstd_q;
    ParamProfile none_n, none_q;
};

ProfileBundle measure_bundle(const std::vector<GridMap>& corpus, const TimingOptions& timing) {
    ProfileBundle b;
    b.none_n = measure_profile(corpus, CodecSpec::none(), false, WireMode::PatchWise, timing);
    b.none_q = measure_profile(corpus, CodecSpec::none(), true, WireMode::PatchWise, timing);
    for (std::int32_t a : lz4_param_grid()) {
        b.lz4_n.push_back(
            measure_profile(corpus, CodecSpec::lz4(a), false, WireMode::PatchWise, timing));
        b.lz4_q.push_back(
            measure_profile(corpus, CodecSpec::lz4(a), true, WireMode::PatchWise, timing));
    }
    for (std::int32_t level : zstd_param_grid()) {
        b.zstd_n.push_back(
            measure_profile(corpus, CodecSpec::zstd(level), false, WireMode::PatchWise, timing));
        b.zstd_q.push_back(
            measure_profile(corpus, CodecSpec::zstd(level), true, WireMode::PatchWise, timing));
    }
    return b;
}

const ParamProfile* find_profile(const std::vector<ParamProfile>& profiles, std::int32_t param) {
    for (const ParamProfile& p : profiles) {
        if (p.spec.param == param) return &p;
    }
    return nullptr;
}

void criterion_5_parameter_trends(const std::vector<GridMap>& corpus, const ProfileBundle& b,
                                  const TimingOptions& timing) {
    int lz4_violations = 0;
    for (std::size_t i = 1; i < b.lz4_n.size(); ++i) {
        if (b.lz4_n[i].mean_size_bytes < b.lz4_n[i - 1].mean_size_bytes) ++lz4_violations;
    }

    // Zstd levels -100..10 step 10; level 0 (the default-level alias) is not
    // in the benchmark grid, measured separately.
    std::vector<double> zstd_sizes;
    for (int level = -100; level <= 10; level += 10) {
        if (level == 0) {
            zstd_sizes.push_back(
                measure_profile(corpus, CodecSpec{Algorithm::Zstd, 0}, false,
                                WireMode::PatchWise, timing)
                    .mean_size_bytes);
        } else {
            zstd_sizes.push_back(find_profile(b.zstd_n, level)->mean_size_bytes);
        }
    }
    int zstd_violations = 0;
    for (std::size_t i = 1; i < zstd_sizes.size(); ++i) {
        if (zstd_sizes[i] > zstd_sizes[i - 1]) ++zstd_violations;
    }

    const bool pass = lz4_violations <= 1 && zstd_violations <= 1;
    report(5, "parameter trends", pass,
           "adjacent violations: lz4 " + std::to_string(lz4_violations) + ", zstd " +
               std::to_string(zstd_violations) + " (<= 1 each)");
}

void criterion_6_baseline_dominance(const ProfileBundle& b) {
    bool pass = true;
    std::string detail;
    for (double bandwidth : {10e6, 100e6, 1e9, 10e9}) {
        for (bool quantized : {false, true}) {
            const ParamProfile& none = quantized ? b.none_q : b.none_n;
            const auto& lz4 = quantized ? b.lz4_q : b.lz4_n;
            const auto& zstd = quantized ? b.zstd_q : b.zstd_n;
            const double none_total = none.total_at(bandwidth);
            const double lz4_total = optimal_from_profiles(lz4, bandwidth).mean_t_e2e;
            const double zstd_total = optimal_from_profiles(zstd, bandwidth).mean_t_e2e;
            if (!(lz4_total < none_total && zstd_total < none_total)) {
                pass = false;
                detail += " [" + fmt(bandwidth / 1e6, 6) + " Mbps q=" +
                          std::to_string(quantized) + ": none " + fmt(none_total) + " lz4 " +
                          fmt(lz4_total) + " zstd " + fmt(zstd_total) + "]";
            }
        }
    }
    report(6, "baseline dominance", pass,
           pass ? "best lz4 and zstd beat codec None at 10M/100M/1G/10G, both precisions"
                : detail);
}

void criterion_7_low_bandwidth_argmin(const ProfileBundle& b) {
    bool pass = true;
    std::string detail;
    for (bool quantized : {false, true}) {
        const auto& lz4 = quantized ? b.lz4_q : b.lz4_n;
        const auto& zstd = quantized ? b.zstd_q : b.zstd_n;
        const OptimalChoice lz4_best = optimal_from_profiles(lz4, 10e6);
        const OptimalChoice zstd_best = optimal_from_profiles(zstd, 10e6);
        const bool zstd_wins = zstd_best.mean_t_e2e < lz4_best.mean_t_e2e;
        const bool ranges = lz4_best.param <= 2 && zstd_best.param >= 1;
        if (!(zstd_wins && ranges)) pass = false;
        detail += std::string(quantized ? " q:" : " n:") + " lz4@" +
                  std::to_string(lz4_best.param) + "=" + fmt(lz4_best.mean_t_e2e * 1e3, 4) +
                  "ms zstd@" + std::to_string(zstd_best.param) + "=" +
                  fmt(zstd_best.mean_t_e2e * 1e3, 4) + "ms";
    }
    report(7, "10 Mbps argmin", pass, detail);
}

void criterion_8_crossover(const ProfileBundle& b) {
    const CrossoverResult normal = crossover_from_profiles(b.lz4_n, b.zstd_n);
    const CrossoverResult quantized = crossover_from_profiles(b.lz4_q, b.zstd_q);
    const bool in_range = normal.found && normal.bandwidth_bps >= 100e6 &&
                          normal.bandwidth_bps <= 10e9 && quantized.found &&
                          quantized.bandwidth_bps >= 100e6 && quantized.bandwidth_bps <= 10e9;
    const bool ordered = quantized.found && normal.found &&
                         quantized.bandwidth_bps <= normal.bandwidth_bps;
    report(8, "crossover existence", in_range && ordered,
           "normal " + fmt(normal.bandwidth_bps / 1e6, 5) + " Mbps, quantized " +
               fmt(quantized.bandwidth_bps / 1e6, 5) + " Mbps");
}

void criterion_9_shaped_channel(const std::vector<GridMap>& corpus) {
    // 9a: goodput of a 10 Mbps token-bucket session over >= 30 s.
    ChannelConfig channel = ChannelConfig::v2x_10mbps();
    SessionOptions options;
    const std::uint64_t message_bytes =
        encode_patchwise(corpus[0], CodecSpec::none(), false).bytes.size();
    options.messages =
        static_cast<int>(32.0 * channel.target_bps / 8.0 / static_cast<double>(message_bytes)) +
        1;
    const SessionResult session =
        send_session(corpus, CodecSpec::none(), false, WireMode::PatchWise, channel, options);
    const double goodput_err = std::abs(session.goodput_bps - channel.target_bps) /
                               channel.target_bps;
    const bool goodput_ok = session.wall_seconds >= 30.0 && goodput_err <= 0.10;

    // 9b: per-message Gaussian jitter converges to the configured moments.
    ChannelConfig jitter_channel;
    jitter_channel.target_bps = 6.36e6;
    jitter_channel.burst_bytes = 4096;
    jitter_channel.jitter = GaussianJitter{6.36e6, 3.09e6};
    jitter_channel.jitter_seed = 7;
    SessionOptions jitter_options;
    jitter_options.messages = 200;
    jitter_options.chunk_bytes = 4096;
    const SessionResult jitter_session = send_session(
        corpus, CodecSpec::none(), true, WireMode::PatchWise, jitter_channel, jitter_options);
    std::vector<double> per_message_bps;
    for (const TransferRecord& r : jitter_session.records) {
        const double wire = r.send_complete_s - r.send_start_s;
        if (wire > 0.0) {
            per_message_bps.push_back(static_cast<double>(r.size_bytes) * 8.0 / wire);
        }
    }
    const Stats stats = summarize(per_message_bps);
    const double mean_err = std::abs(stats.mean - 6.36e6) / 6.36e6;
    const double std_err = std::abs(stats.std - 3.09e6) / 3.09e6;
    const bool jitter_ok = per_message_bps.size() == 200 && mean_err <= 0.15 && std_err <= 0.15;

    report(9, "shaped-channel fidelity", goodput_ok && jitter_ok,
           "goodput " + fmt(session.goodput_bps / 1e6, 4) + " Mbps over " +
               fmt(session.wall_seconds, 3) + " s; jitter mean " + fmt(stats.mean / 1e6, 3) +
               " Mbps std " + fmt(stats.std / 1e6, 3) + " Mbps");
}

void criterion_10_table_orderings(const std::vector<GridMap>& v2x_corpus,
                                  const std::vector<GridMap>& dpu_corpus) {
    TimingOptions timing;
    timing.repetitions = 3;

    const EvalReport v2x = run_evaluation(v2x_corpus, EvalPreset::V2X10Mbps, 50, timing);
    // cells: None, LZ4, Zstd, None^q, LZ4^q, Zstd^q
    const double none = v2x.cells[0].t_e2e_ms.mean;
    const double lz4 = v2x.cells[1].t_e2e_ms.mean;
    const double zstd = v2x.cells[2].t_e2e_ms.mean;
    const double none_q = v2x.cells[3].t_e2e_ms.mean;
    const double lz4_q = v2x.cells[4].t_e2e_ms.mean;
    const double zstd_q = v2x.cells[5].t_e2e_ms.mean;
    const bool v2x_ok = none > lz4 && lz4 > zstd && none_q > lz4_q && none_q > zstd_q &&
                        none / zstd_q >= 5.0;

    const EvalReport dpu = run_evaluation(dpu_corpus, EvalPreset::Dpu10GbpsLoopback, 50, timing);
    const double dpu_none = dpu.cells[0].t_e2e_ms.mean;
    const double dpu_lz4 = dpu.cells[1].t_e2e_ms.mean;
    const bool dpu_ok = dpu_lz4 < dpu_none;

    report(10, "transport orderings", v2x_ok && dpu_ok,
           "v2x ms: none " + fmt(none, 4) + " > lz4 " + fmt(lz4, 4) + " > zstd " +
               fmt(zstd, 4) + ", none^q " + fmt(none_q, 4) + " > {lz4^q " + fmt(lz4_q, 4) +
               ", zstd^q " + fmt(zstd_q, 4) + "}, none/zstd^q " + fmt(none / zstd_q, 3) +
               "; dpu ms: lz4 " + fmt(dpu_lz4, 4) + " < none " + fmt(dpu_none, 4));
}

void criterion_11_golden_files() {
    // Mirrors the wire golden-fixture test: decode committed bytes, compare
    // to the reference grid, re-encode bit-exactly.
    GridMap grid;
    grid.base_rate = 0.25f;
    grid.timestamp_ns = 1234567890123456789ull;
    grid.frame_id = "map";
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
    grid.patches.push_back(p0);
    Patch p1;
    p1.patch_id = 7;
    p1.origin_x = 1.6;
    p1.origin_y = -3.2;
    p1.cell_size = 0.2f;
    p1.cells_per_side = 2;
    p1.cells = {{0.0f, 0.0f}, {1.0f, 0.0f}, {0.0f, 1.0f}, {0.5f, 0.25f}};
    grid.patches.push_back(p1);

    struct Case {
        const char* name;
        CodecSpec spec;
        WireMode mode;
        bool quantized;
    };
    const Case cases[] = {
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

    bool pass = true;
    std::string detail = "11 fixtures decode and re-encode bit-exactly";
    for (const Case& c : cases) {
        const std::filesystem::path path =
            std::filesystem::path(APGM_GOLDEN_DIR) / (std::string(c.name) + ".bin");
        std::ifstream in(path, std::ios::binary);
        if (!in.good()) {
            pass = false;
            detail = "missing fixture " + path.string();
            break;
        }
        const Bytes bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        try {
            const Decoded d = decode(bytes);
            const bool content_ok = c.quantized ? d.qgrid() == quantize_grid(grid)
                                                : d.grid() == grid;
            const WireMessage re = c.mode == WireMode::PatchWise
                                       ? encode_patchwise(grid, c.spec, c.quantized)
                                       : encode_full(grid, c.spec, c.quantized);
            if (!content_ok || re.bytes != bytes || d.spec != c.spec ||
                d.quantized != c.quantized || d.mode != c.mode) {
                pass = false;
                detail = std::string("fixture mismatch: ") + c.name;
                break;
            }
        } catch (const Error& e) {
            pass = false;
            detail = std::string("fixture ") + c.name + " failed: " + e.what();
            break;
        }
    }
    report(11, "wire golden files", pass, detail);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    const double t0 = now_s();

    criterion_1_quantizer_bound();
    criterion_2_memory_reduction();

    const auto corpus50 = make_corpus(101, 60000, 50);
    criterion_3_losslessness(corpus50);
    criterion_4_transmission_ratio(corpus50);

    TimingOptions timing;
    timing.repetitions = 3;
    const auto corpus20 = make_corpus(202, 100000, 20);
    const ProfileBundle bundle = measure_bundle(corpus20, timing);
    criterion_5_parameter_trends(corpus20, bundle, TimingOptions{1});
    criterion_6_baseline_dominance(bundle);
    criterion_7_low_bandwidth_argmin(bundle);
    criterion_8_crossover(bundle);

    const auto corpus_small = make_corpus(303, 40000, 3);
    criterion_9_shaped_channel(corpus_small);

    const auto corpus_dpu = make_corpus(404, 150000, 3);
    criterion_10_table_orderings(corpus_small, corpus_dpu);

    criterion_11_golden_files();

    std::printf("%s (%d failure%s, %.1f s)\n", g_failures == 0 ? "ALL CRITERIA PASS" : "FAILED",
                g_failures, g_failures == 1 ? "" : "s", now_s() - t0);
    return g_failures == 0 ? 0 : 1;
}
