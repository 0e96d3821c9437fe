#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "apgm/codec.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/wire.hpp"

namespace apgm {

/// Transmission term of the latency model: size * 8 / bandwidth.
/// Never measured; stack and protocol overheads are not modeled.
double transmission_seconds(std::uint64_t size_bytes, double bandwidth_bps);

/// The five end-to-end components. t_trans is analytic from the actual
/// message size; the other four are wall-clock measurements. Quantization
/// time is excluded from the model by construction.
struct E2ETimings {
    double t_comp = 0.0;
    double t_ser = 0.0;
    double t_trans = 0.0;
    double t_deser = 0.0;
    double t_decomp = 0.0;
    std::uint64_t size_bytes = 0;   // actual wire message size S
    double bandwidth_bps = 0.0;     // B

    double total() const { return t_comp + t_ser + t_trans + t_deser + t_decomp; }
};

struct TimingOptions {
    int repetitions = 5;  // per-component median over this many runs
};

/// Runs the encode/decode pipeline in the stage order of `mode`, measuring
/// each component; medians over `repetitions` runs suppress timer noise.
E2ETimings time_pipeline(const GridMap& grid, const CodecSpec& spec, bool quantized,
                         WireMode mode, double bandwidth_bps,
                         const TimingOptions& options = {});

/// Corpus-mean measured components for one (spec, quantized, mode) choice.
/// Bandwidth-independent; every downstream result (sweeps, optima, the
/// crossover search) is pure arithmetic over these.
struct ParamProfile {
    CodecSpec spec;
    bool quantized = false;
    WireMode mode = WireMode::PatchWise;
    double t_comp = 0.0;
    double t_ser = 0.0;
    double t_deser = 0.0;
    double t_decomp = 0.0;
    double mean_size_bytes = 0.0;

    double compute_seconds() const { return t_comp + t_ser + t_deser + t_decomp; }
    double total_at(double bandwidth_bps) const;
};

ParamProfile measure_profile(const std::vector<GridMap>& corpus, const CodecSpec& spec,
                             bool quantized, WireMode mode, const TimingOptions& options = {});

struct SweepResult {
    CodecSpec spec;
    bool quantized = false;
    WireMode mode = WireMode::PatchWise;
    E2ETimings mean;              // mean components over the corpus
    double mean_size_bytes = 0.0;
};

std::vector<SweepResult> sweep(const std::vector<GridMap>& corpus,
                               const std::vector<CodecSpec>& specs,
                               const std::vector<bool>& quantized_options, WireMode mode,
                               double bandwidth_bps, const TimingOptions& options = {});

/// Benchmark parameter grids: LZ4 accelerations {2^0 .. 2^12}; Zstd levels
/// every integer in [-10,10] plus every 10th in [-100,-10]. Level 0 is
/// excluded: libzstd treats it as an alias for the default level.
std::vector<std::int32_t> lz4_param_grid();
std::vector<std::int32_t> zstd_param_grid();

struct OptimalChoice {
    std::int32_t param = 0;
    double mean_t_e2e = 0.0;  // seconds
};

/// Argmin of mean total() over the algorithm's parameter grid at fixed B.
/// Parameters within 2% of the minimum count as ties; ties break toward the
/// faster-compressing end (higher acceleration, lower level).
OptimalChoice optimal_param(const std::vector<GridMap>& corpus, Algorithm algorithm,
                            bool quantized, double bandwidth_bps,
                            const TimingOptions& options = {});

/// Same selection rule over pre-measured profiles (all same algorithm).
OptimalChoice optimal_from_profiles(const std::vector<ParamProfile>& profiles,
                                    double bandwidth_bps);

struct CrossoverResult {
    bool found = false;
    double bandwidth_bps = 0.0;       // switch point, 1 Mbps resolution
    Algorithm dominant = Algorithm::Zstd;  // when !found: winner across the range
};

/// Binary search for the bandwidth where the t_e2e-optimal algorithm flips
/// from Zstd (low B) to LZ4 (high B), each at its own optimal parameter.
/// Search range [1 Mbps, 100 Gbps]; brackets are verified first.
CrossoverResult find_crossover(const std::vector<GridMap>& corpus, bool quantized,
                               const TimingOptions& options = {});
CrossoverResult crossover_from_profiles(const std::vector<ParamProfile>& lz4_profiles,
                                        const std::vector<ParamProfile>& zstd_profiles);

struct Stats {
    double mean = 0.0;
    double std = 0.0;  // population (divisor n)
    double min = 0.0;
    double max = 0.0;
};

/// Throws ConfigError on empty input.
Stats summarize(const std::vector<double>& samples);

/// CSV with fixed columns: spec,param,quantized,mode,t_comp,t_ser,t_trans,
/// t_deser,t_decomp,total,size_bytes. Times in seconds.
void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& rows);

}  // namespace apgm
