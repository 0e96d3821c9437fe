#include "apgm/latency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "apgm/error.hpp"
#include "apgm/quantize.hpp"

namespace apgm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct StageSamples {
    std::vector<double> comp, ser, deser, decomp;
};

// One measured pipeline execution in the stage order of `mode`. Quantization
// happens outside the timed region: the model excludes it by construction.
void run_once(const GridMap& grid, const QuantizedGridMap* qgrid, const CodecSpec& spec,
              bool quantized, WireMode mode, StageSamples& samples, std::uint64_t& out_size) {
    if (mode == WireMode::PatchWise) {
        const GridInfo info = quantized ? grid_info(*qgrid) : grid_info(grid);
        const std::vector<Bytes> payloads =
            quantized ? pack_patch_payloads(*qgrid) : pack_patch_payloads(grid);

        auto t0 = Clock::now();
        const std::vector<Bytes> compressed =
            compress_patch_payloads(spec, info, quantized, payloads);
        samples.comp.push_back(seconds_since(t0));

        t0 = Clock::now();
        const Bytes message = assemble_message(info, spec, quantized, true, compressed);
        samples.ser.push_back(seconds_since(t0));
        out_size = message.size();

        t0 = Clock::now();
        const ParsedMessage parsed = parse_message(message);
        samples.deser.push_back(seconds_since(t0));

        t0 = Clock::now();
        const Decoded decoded = materialize(parsed, WireMode::PatchWise, parsed.spec);
        samples.decomp.push_back(seconds_since(t0));
        (void)decoded;
    } else {
        auto t0 = Clock::now();
        const Bytes inner = quantized ? serialize_inner(*qgrid) : serialize_inner(grid);
        double ser = seconds_since(t0);

        t0 = Clock::now();
        const Bytes message = envelope_wrap(spec, inner);
        samples.comp.push_back(seconds_since(t0));
        out_size = message.size();

        t0 = Clock::now();
        const EnvelopeView view = parse_envelope(message);
        double deser = seconds_since(t0);

        t0 = Clock::now();
        const Bytes decompressed = decompress_envelope(view);
        samples.decomp.push_back(seconds_since(t0));

        t0 = Clock::now();
        const ParsedMessage parsed = parse_message(decompressed);
        const Decoded decoded = materialize(parsed, WireMode::Full, view.spec);
        deser += seconds_since(t0);
        (void)decoded;

        samples.ser.push_back(ser);
        samples.deser.push_back(deser);
    }
}

E2ETimings measure_components(const GridMap& grid, const CodecSpec& spec, bool quantized,
                              WireMode mode, double bandwidth_bps, int repetitions) {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    validate_spec(spec);

    QuantizedGridMap qgrid;
    if (quantized) qgrid = quantize_grid(grid);

    StageSamples samples;
    std::uint64_t size = 0;
    for (int r = 0; r < repetitions; ++r) {
        run_once(grid, quantized ? &qgrid : nullptr, spec, quantized, mode, samples, size);
    }

    E2ETimings t;
    t.t_comp = median(samples.comp);
    t.t_ser = median(samples.ser);
    t.t_deser = median(samples.deser);
    t.t_decomp = median(samples.decomp);
    t.size_bytes = size;
    t.bandwidth_bps = bandwidth_bps;
    t.t_trans = bandwidth_bps > 0.0 ? transmission_seconds(size, bandwidth_bps) : 0.0;
    return t;
}

double profile_total_at(const ParamProfile& p, double bandwidth_bps) {
    return p.compute_seconds() + p.mean_size_bytes * 8.0 / bandwidth_bps;
}

std::vector<ParamProfile> measure_algorithm_profiles(const std::vector<GridMap>& corpus,
                                                     Algorithm algorithm, bool quantized,
                                                     const TimingOptions& options) {
    const std::vector<std::int32_t> grid =
        algorithm == Algorithm::LZ4 ? lz4_param_grid() : zstd_param_grid();
    std::vector<ParamProfile> profiles;
    profiles.reserve(grid.size());
    for (std::int32_t param : grid) {
        profiles.push_back(measure_profile(corpus, CodecSpec{algorithm, param}, quantized,
                                           WireMode::PatchWise, options));
    }
    return profiles;
}

}  // namespace

double transmission_seconds(std::uint64_t size_bytes, double bandwidth_bps) {
    if (bandwidth_bps <= 0.0) throw ConfigError("bandwidth must be positive");
    return static_cast<double>(size_bytes) * 8.0 / bandwidth_bps;
}

double ParamProfile::total_at(double bandwidth_bps) const {
    return profile_total_at(*this, bandwidth_bps);
}

E2ETimings time_pipeline(const GridMap& grid, const CodecSpec& spec, bool quantized,
                         WireMode mode, double bandwidth_bps, const TimingOptions& options) {
    if (bandwidth_bps <= 0.0) throw ConfigError("bandwidth must be positive");
    return measure_components(grid, spec, quantized, mode, bandwidth_bps, options.repetitions);
}

ParamProfile measure_profile(const std::vector<GridMap>& corpus, const CodecSpec& spec,
                             bool quantized, WireMode mode, const TimingOptions& options) {
    if (corpus.empty()) throw ConfigError("corpus must not be empty");
    ParamProfile profile;
    profile.spec = spec;
    profile.quantized = quantized;
    profile.mode = mode;
    for (const GridMap& frame : corpus) {
        const E2ETimings t =
            measure_components(frame, spec, quantized, mode, 1.0, options.repetitions);
        profile.t_comp += t.t_comp;
        profile.t_ser += t.t_ser;
        profile.t_deser += t.t_deser;
        profile.t_decomp += t.t_decomp;
        profile.mean_size_bytes += static_cast<double>(t.size_bytes);
    }
    const auto n = static_cast<double>(corpus.size());
    profile.t_comp /= n;
    profile.t_ser /= n;
    profile.t_deser /= n;
    profile.t_decomp /= n;
    profile.mean_size_bytes /= n;
    return profile;
}

std::vector<SweepResult> sweep(const std::vector<GridMap>& corpus,
                               const std::vector<CodecSpec>& specs,
                               const std::vector<bool>& quantized_options, WireMode mode,
                               double bandwidth_bps, const TimingOptions& options) {
    if (corpus.empty()) throw ConfigError("corpus must not be empty");
    if (bandwidth_bps <= 0.0) throw ConfigError("bandwidth must be positive");
    std::vector<SweepResult> results;
    results.reserve(specs.size() * quantized_options.size());
    for (const CodecSpec& spec : specs) {
        for (bool quantized : quantized_options) {
            const ParamProfile p = measure_profile(corpus, spec, quantized, mode, options);
            SweepResult r;
            r.spec = spec;
            r.quantized = quantized;
            r.mode = mode;
            r.mean_size_bytes = p.mean_size_bytes;
            r.mean.t_comp = p.t_comp;
            r.mean.t_ser = p.t_ser;
            r.mean.t_deser = p.t_deser;
            r.mean.t_decomp = p.t_decomp;
            r.mean.size_bytes = static_cast<std::uint64_t>(std::llround(p.mean_size_bytes));
            r.mean.bandwidth_bps = bandwidth_bps;
            r.mean.t_trans = p.mean_size_bytes * 8.0 / bandwidth_bps;
            results.push_back(r);
        }
    }
    return results;
}

std::vector<std::int32_t> lz4_param_grid() {
    std::vector<std::int32_t> grid;
    for (int e = 0; e <= 12; ++e) grid.push_back(1 << e);
    return grid;
}

std::vector<std::int32_t> zstd_param_grid() {
    std::vector<std::int32_t> grid;
    for (int level = -100; level <= -20; level += 10) grid.push_back(level);
    for (int level = -10; level <= 10; ++level) {
        if (level != 0) grid.push_back(level);  // 0 aliases the default level
    }
    return grid;
}

OptimalChoice optimal_from_profiles(const std::vector<ParamProfile>& profiles,
                                    double bandwidth_bps) {
    if (profiles.empty()) throw ConfigError("no profiles to optimize over");
    const Algorithm algorithm = profiles.front().spec.algorithm;

    double best_total = std::numeric_limits<double>::infinity();
    for (const ParamProfile& p : profiles) {
        best_total = std::min(best_total, profile_total_at(p, bandwidth_bps));
    }

    // Parameters within 2% of the minimum tie; pick the fastest-compressing
    // one (max acceleration for LZ4, min level for Zstd).
    const double tie_bound = best_total * 1.02;
    OptimalChoice choice;
    bool first = true;
    for (const ParamProfile& p : profiles) {
        const double total = profile_total_at(p, bandwidth_bps);
        if (total > tie_bound) continue;
        const bool prefer = first || (algorithm == Algorithm::LZ4 ? p.spec.param > choice.param
                                                                  : p.spec.param < choice.param);
        if (prefer) {
            choice.param = p.spec.param;
            choice.mean_t_e2e = total;
            first = false;
        }
    }
    return choice;
}

OptimalChoice optimal_param(const std::vector<GridMap>& corpus, Algorithm algorithm,
                            bool quantized, double bandwidth_bps, const TimingOptions& options) {
    if (algorithm != Algorithm::LZ4 && algorithm != Algorithm::Zstd) {
        throw ConfigError("optimal_param supports LZ4 and Zstd only");
    }
    if (bandwidth_bps <= 0.0) throw ConfigError("bandwidth must be positive");
    return optimal_from_profiles(
        measure_algorithm_profiles(corpus, algorithm, quantized, options), bandwidth_bps);
}

CrossoverResult crossover_from_profiles(const std::vector<ParamProfile>& lz4_profiles,
                                        const std::vector<ParamProfile>& zstd_profiles) {
    constexpr double kLow = 1e6;     // 1 Mbps
    constexpr double kHigh = 100e9;  // 100 Gbps
    constexpr double kResolution = 1e6;

    auto lz4_wins = [&](double bandwidth) {
        return optimal_from_profiles(lz4_profiles, bandwidth).mean_t_e2e <
               optimal_from_profiles(zstd_profiles, bandwidth).mean_t_e2e;
    };

    CrossoverResult result;
    const bool low_lz4 = lz4_wins(kLow);
    const bool high_lz4 = lz4_wins(kHigh);
    if (low_lz4 == high_lz4) {
        result.found = false;
        result.dominant = low_lz4 ? Algorithm::LZ4 : Algorithm::Zstd;
        return result;
    }

    double lo = kLow;   // Zstd optimal here
    double hi = kHigh;  // LZ4 optimal here
    while (hi - lo > kResolution) {
        const double mid = 0.5 * (lo + hi);
        if (lz4_wins(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    result.found = true;
    result.bandwidth_bps = std::round(hi / kResolution) * kResolution;
    result.dominant = Algorithm::LZ4;
    return result;
}

CrossoverResult find_crossover(const std::vector<GridMap>& corpus, bool quantized,
                               const TimingOptions& options) {
    const auto lz4_profiles =
        measure_algorithm_profiles(corpus, Algorithm::LZ4, quantized, options);
    const auto zstd_profiles =
        measure_algorithm_profiles(corpus, Algorithm::Zstd, quantized, options);
    return crossover_from_profiles(lz4_profiles, zstd_profiles);
}

Stats summarize(const std::vector<double>& samples) {
    if (samples.empty()) throw ConfigError("summarize requires at least one sample");
    Stats s;
    s.min = samples.front();
    s.max = samples.front();
    double sum = 0.0;
    for (double v : samples) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(samples.size());
    double sq = 0.0;
    for (double v : samples) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(samples.size()));
    return s;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& rows) {
    out << "spec,param,quantized,mode,t_comp,t_ser,t_trans,t_deser,t_decomp,total,size_bytes\n";
    for (const SweepResult& r : rows) {
        out << algorithm_name(r.spec.algorithm) << ',' << r.spec.param << ','
            << (r.quantized ? 1 : 0) << ',' << mode_name(r.mode) << ',' << r.mean.t_comp << ','
            << r.mean.t_ser << ',' << r.mean.t_trans << ',' << r.mean.t_deser << ','
            << r.mean.t_decomp << ',' << r.mean.total() << ',' << r.mean.size_bytes << '\n';
    }
}

}  // namespace apgm
