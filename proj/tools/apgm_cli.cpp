// Command-line front end: corpus generation, parameter sweeps, optimal
// parameter tables, crossover search, transport evaluation and corpus-wide
// round-trip checks. Every CSV is accompanied by a .manifest.json recording
// the invocation and host, so results stay attributable.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "apgm/error.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/latency.hpp"
#include "apgm/quantize.hpp"
#include "apgm/transport.hpp"
#include "apgm/wire.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

using json = nlohmann::json;

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string cpu_model() {
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos && colon + 2 <= line.size()) {
                return line.substr(colon + 2);
            }
        }
    }
    return "unknown";
}

struct Manifest {
    std::string subcommand;
    std::vector<std::string> argv;
    std::int64_t corpus_seed = -1;  // -1: not applicable
    std::string started;
    std::string finished;
};

void write_manifest(const Manifest& m, const std::string& next_to_path) {
    json doc;
    doc["subcommand"] = m.subcommand;
    doc["argv"] = m.argv;
    if (m.corpus_seed >= 0) doc["corpus_seed"] = m.corpus_seed;
    doc["host"] = {{"cpu_model", cpu_model()},
                   {"cores", std::thread::hardware_concurrency()}};
    doc["tool_version"] = kToolVersion;
    doc["started"] = m.started;
    doc["finished"] = m.finished;
    const std::string path = next_to_path + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw apgm::IoError("cannot write manifest: " + path);
    out << doc.dump(2) << '\n';
}

// Accepts raw bits/s or SI suffixes: 10M, 100M, 1G, 2.5G, 10Gbps.
double parse_bandwidth(const std::string& text) {
    std::string s = text;
    if (s.size() >= 3 && (s.substr(s.size() - 3) == "bps" || s.substr(s.size() - 3) == "BPS")) {
        s = s.substr(0, s.size() - 3);
    }
    if (s.empty()) throw apgm::ConfigError("empty bandwidth");
    double scale = 1.0;
    switch (s.back()) {
        case 'k': case 'K': scale = 1e3; s.pop_back(); break;
        case 'm': case 'M': scale = 1e6; s.pop_back(); break;
        case 'g': case 'G': scale = 1e9; s.pop_back(); break;
        default: break;
    }
    std::size_t consumed = 0;
    const double value = std::stod(s, &consumed);
    if (consumed != s.size() || value <= 0.0) {
        throw apgm::ConfigError("cannot parse bandwidth: " + text);
    }
    return value * scale;
}

std::string bandwidth_label(double bps) {
    if (bps >= 1e9 && std::fmod(bps, 1e9) == 0.0) {
        return std::to_string(static_cast<long long>(bps / 1e9)) + "G";
    }
    if (bps >= 1e6 && std::fmod(bps, 1e6) == 0.0) {
        return std::to_string(static_cast<long long>(bps / 1e6)) + "M";
    }
    return std::to_string(static_cast<long long>(bps));
}

std::vector<double> parse_bandwidth_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(parse_bandwidth(item));
    }
    if (out.empty()) throw apgm::ConfigError("no bandwidths given");
    return out;
}

std::vector<bool> quantized_options(const std::string& sel) {
    if (sel == "no") return {false};
    if (sel == "yes") return {true};
    return {false, true};
}

std::string out_with_suffix(const std::string& path, const std::string& suffix) {
    const auto dot = path.rfind('.');
    if (dot == std::string::npos || path.find('/', dot) != std::string::npos) {
        return path + "_" + suffix;
    }
    return path.substr(0, dot) + "_" + suffix + path.substr(dot);
}

std::vector<apgm::GridMap> load_corpus(const std::string& path) {
    const auto corpus = apgm::read_corpus_file(path);
    if (corpus.empty()) throw apgm::ConfigError("corpus file holds no frames: " + path);
    return corpus;
}

// ---------------------------------------------------------------------------

int cmd_gen(const Manifest& base, std::uint64_t seed, std::uint64_t frames,
            std::uint64_t target_cells, const std::string& out_path) {
    Manifest manifest = base;
    manifest.corpus_seed = static_cast<std::int64_t>(seed);

    apgm::CorpusConfig config;
    config.seed = seed;
    config.target_cells = target_cells;
    const auto corpus = apgm::generate_corpus(config, frames);
    apgm::write_corpus_file(out_path, corpus);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        std::cout << "frame " << i << ": " << apgm::total_cells(corpus[i]) << " cells, "
                  << corpus[i].patches.size() << " patches\n";
    }
    std::cout << "wrote " << corpus.size() << " frames to " << out_path << '\n';
    manifest.finished = iso8601_now();
    write_manifest(manifest, out_path);
    return 0;
}

struct ProfileSet {
    apgm::Algorithm algorithm;
    bool quantized;
    std::vector<apgm::ParamProfile> profiles;
};

std::vector<ProfileSet> measure_profile_sets(const std::vector<apgm::GridMap>& corpus,
                                             const std::vector<apgm::Algorithm>& algorithms,
                                             const std::vector<bool>& quantized,
                                             apgm::WireMode mode,
                                             const apgm::TimingOptions& timing, bool analytic) {
    std::vector<ProfileSet> sets;
    for (apgm::Algorithm algorithm : algorithms) {
        const auto grid = algorithm == apgm::Algorithm::LZ4 ? apgm::lz4_param_grid()
                                                            : apgm::zstd_param_grid();
        for (bool q : quantized) {
            ProfileSet set{algorithm, q, {}};
            for (std::int32_t param : grid) {
                auto profile = apgm::measure_profile(corpus, apgm::CodecSpec{algorithm, param},
                                                     q, mode, timing);
                if (analytic) {
                    profile.t_comp = profile.t_ser = profile.t_deser = profile.t_decomp = 0.0;
                }
                set.profiles.push_back(profile);
            }
            sets.push_back(std::move(set));
        }
    }
    return sets;
}

void print_optimal_table(const std::vector<ProfileSet>& sets,
                         const std::vector<double>& bandwidths, std::ostream& out,
                         char separator) {
    const bool pretty = separator == ' ';
    auto emit = [&](const std::string& cell, bool last) {
        if (pretty) {
            out << std::left << std::setw(16) << cell;
        } else {
            out << cell << (last ? "" : ",");
        }
    };
    emit("algorithm", false);
    for (std::size_t i = 0; i < bandwidths.size(); ++i) {
        emit(bandwidth_label(bandwidths[i]), i + 1 == bandwidths.size());
    }
    out << '\n';
    for (const ProfileSet& set : sets) {
        std::string row_label = set.algorithm == apgm::Algorithm::LZ4 ? "LZ4" : "Zstd";
        if (set.quantized) row_label += "^q";
        emit(row_label, false);
        for (std::size_t i = 0; i < bandwidths.size(); ++i) {
            const auto choice = apgm::optimal_from_profiles(set.profiles, bandwidths[i]);
            std::ostringstream cell;
            cell << choice.param << "; " << std::fixed << std::setprecision(2)
                 << choice.mean_t_e2e * 1e3;
            emit(cell.str(), i + 1 == bandwidths.size());
        }
        out << '\n';
    }
}

int cmd_sweep(const Manifest& base, const std::string& corpus_path,
              const std::string& algorithm_sel, const std::string& bandwidths_csv,
              const std::string& quantized_sel, const std::string& mode_sel,
              const std::string& out_path, int reps, bool analytic) {
    Manifest manifest = base;
    const auto corpus = load_corpus(corpus_path);
    const auto bandwidths = parse_bandwidth_list(bandwidths_csv);
    const auto quantized = quantized_options(quantized_sel);
    const apgm::WireMode mode =
        mode_sel == "full" ? apgm::WireMode::Full : apgm::WireMode::PatchWise;

    std::vector<apgm::Algorithm> algorithms;
    if (algorithm_sel == "lz4") {
        algorithms = {apgm::Algorithm::LZ4};
    } else if (algorithm_sel == "zstd") {
        algorithms = {apgm::Algorithm::Zstd};
    } else {
        algorithms = {apgm::Algorithm::LZ4, apgm::Algorithm::Zstd};
    }

    apgm::TimingOptions timing;
    timing.repetitions = reps;
    const auto sets =
        measure_profile_sets(corpus, algorithms, quantized, mode, timing, analytic);

    for (double bandwidth : bandwidths) {
        std::vector<apgm::SweepResult> rows;
        for (const ProfileSet& set : sets) {
            for (const apgm::ParamProfile& p : set.profiles) {
                apgm::SweepResult r;
                r.spec = p.spec;
                r.quantized = p.quantized;
                r.mode = p.mode;
                r.mean_size_bytes = p.mean_size_bytes;
                r.mean.t_comp = p.t_comp;
                r.mean.t_ser = p.t_ser;
                r.mean.t_deser = p.t_deser;
                r.mean.t_decomp = p.t_decomp;
                r.mean.size_bytes =
                    static_cast<std::uint64_t>(std::llround(p.mean_size_bytes));
                r.mean.bandwidth_bps = bandwidth;
                r.mean.t_trans = p.mean_size_bytes * 8.0 / bandwidth;
                rows.push_back(r);
            }
        }
        const std::string path = out_with_suffix(out_path, bandwidth_label(bandwidth));
        std::ofstream out(path);
        if (!out) throw apgm::IoError("cannot write: " + path);
        apgm::write_sweep_csv(out, rows);
        std::cout << "wrote " << path << '\n';
        manifest.finished = iso8601_now();
        write_manifest(manifest, path);
    }

    std::cout << "\nOptimal parameter; t_e2e [ms] per bandwidth\n";
    print_optimal_table(sets, bandwidths, std::cout, ' ');
    return 0;
}

int cmd_optimal(const Manifest& base, const std::string& corpus_path,
                const std::string& bandwidths_csv, const std::string& quantized_sel,
                const std::string& out_path, int reps, bool analytic) {
    Manifest manifest = base;
    const auto corpus = load_corpus(corpus_path);
    const auto bandwidths = parse_bandwidth_list(bandwidths_csv);
    apgm::TimingOptions timing;
    timing.repetitions = reps;
    const auto sets = measure_profile_sets(corpus, {apgm::Algorithm::LZ4, apgm::Algorithm::Zstd},
                                           quantized_options(quantized_sel),
                                           apgm::WireMode::PatchWise, timing, analytic);
    print_optimal_table(sets, bandwidths, std::cout, ' ');
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw apgm::IoError("cannot write: " + out_path);
        print_optimal_table(sets, bandwidths, out, ',');
        manifest.finished = iso8601_now();
        write_manifest(manifest, out_path);
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

int cmd_crossover(const Manifest& base, const std::string& corpus_path,
                  const std::string& quantized_sel, const std::string& out_path, int reps) {
    Manifest manifest = base;
    const auto corpus = load_corpus(corpus_path);
    apgm::TimingOptions timing;
    timing.repetitions = reps;
    std::ostringstream csv;
    csv << "quantized,found,bandwidth_mbps,dominant\n";
    for (bool q : quantized_options(quantized_sel)) {
        const apgm::CrossoverResult r = apgm::find_crossover(corpus, q, timing);
        if (r.found) {
            std::cout << (q ? "quantized" : "normal") << ": optimal algorithm switches at "
                      << r.bandwidth_bps / 1e6 << " Mbps\n";
        } else {
            std::cout << (q ? "quantized" : "normal") << ": no switch in [1 Mbps, 100 Gbps]; "
                      << apgm::algorithm_name(r.dominant) << " dominates\n";
        }
        csv << (q ? 1 : 0) << ',' << (r.found ? 1 : 0) << ',' << r.bandwidth_bps / 1e6 << ','
            << apgm::algorithm_name(r.dominant) << '\n';
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw apgm::IoError("cannot write: " + out_path);
        out << csv.str();
        manifest.finished = iso8601_now();
        write_manifest(manifest, out_path);
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

int cmd_eval(const Manifest& base, const std::string& corpus_path, const std::string& preset_sel,
             int messages, const std::string& out_path, int reps) {
    Manifest manifest = base;
    const auto corpus = load_corpus(corpus_path);
    const apgm::EvalPreset preset = preset_sel == "dpu" ? apgm::EvalPreset::Dpu10GbpsLoopback
                                                        : apgm::EvalPreset::V2X10Mbps;
    apgm::TimingOptions timing;
    timing.repetitions = reps;
    const apgm::EvalReport report = apgm::run_evaluation(corpus, preset, messages, timing);

    std::cout << "preset " << apgm::preset_name(report.preset) << " ("
              << bandwidth_label(report.bandwidth_bps) << "bps), loopback measured at "
              << report.loopback_bps / 1e9 << " Gbps\n";
    std::cout << std::left << std::setw(8) << "stat";
    for (const apgm::EvalCell& cell : report.cells) {
        std::string label = apgm::spec_label(cell.spec);
        if (cell.quantized) label += "^q";
        if (cell.shaped_limited) label += "*";
        std::cout << std::setw(16) << label;
    }
    std::cout << '\n';
    const char* stats[4] = {"mean", "std", "min", "max"};
    for (int s = 0; s < 4; ++s) {
        std::cout << std::left << std::setw(8) << stats[s];
        for (const apgm::EvalCell& cell : report.cells) {
            const double v = s == 0   ? cell.t_e2e_ms.mean
                             : s == 1 ? cell.t_e2e_ms.std
                             : s == 2 ? cell.t_e2e_ms.min
                                      : cell.t_e2e_ms.max;
            std::cout << std::setw(16) << std::fixed << std::setprecision(2) << v;
        }
        std::cout << '\n';
    }
    bool any_limited = false;
    for (const apgm::EvalCell& cell : report.cells) any_limited |= cell.shaped_limited;
    if (any_limited) {
        std::cout << "* shaped-limited: loopback cannot sustain the preset bandwidth\n";
    }

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw apgm::IoError("cannot write: " + out_path);
        apgm::write_eval_csv(out, report);
        manifest.finished = iso8601_now();
        write_manifest(manifest, out_path);
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

int cmd_roundtrip(const std::string& corpus_path) {
    const auto corpus = load_corpus(corpus_path);
    const std::vector<apgm::CodecSpec> specs = {
        apgm::CodecSpec::none(),  apgm::CodecSpec::rle(),     apgm::CodecSpec::lz4(1),
        apgm::CodecSpec::rlz4(1), apgm::CodecSpec::zstd(3),   apgm::CodecSpec::png(),
    };
    int failures = 0;
    for (const apgm::CodecSpec& spec : specs) {
        for (const apgm::WireMode mode : {apgm::WireMode::PatchWise, apgm::WireMode::Full}) {
            if (mode == apgm::WireMode::Full && spec.algorithm == apgm::Algorithm::PNG) continue;
            for (bool quantized : {false, true}) {
                bool ok = true;
                for (const apgm::GridMap& frame : corpus) {
                    const apgm::WireMessage msg =
                        mode == apgm::WireMode::PatchWise
                            ? apgm::encode_patchwise(frame, spec, quantized)
                            : apgm::encode_full(frame, spec, quantized);
                    const apgm::Decoded decoded = apgm::decode(msg);
                    if (quantized) {
                        ok = ok && decoded.qgrid() == apgm::quantize_grid(frame);
                    } else {
                        ok = ok && decoded.grid() == frame;
                    }
                }
                std::cout << (ok ? "[PASS] " : "[FAIL] ") << apgm::spec_label(spec) << " "
                          << apgm::mode_name(mode) << (quantized ? " quantized" : " normal")
                          << '\n';
                if (!ok) ++failures;
            }
        }
    }
    std::cout << (failures == 0 ? "roundtrip clean" : "roundtrip FAILED") << '\n';
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive patched grid-map transmission toolkit"};
    app.require_subcommand(1);

    Manifest base;
    base.started = iso8601_now();
    for (int i = 0; i < argc; ++i) base.argv.emplace_back(argv[i]);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus file");
    std::uint64_t seed = 1;
    std::uint64_t frames = 10;
    std::uint64_t target_cells = 350000;
    std::string gen_out = "corpus.apgm";
    gen->add_option("--seed", seed, "corpus seed");
    gen->add_option("--frames", frames, "frame count")->check(CLI::PositiveNumber);
    gen->add_option("--target-cells", target_cells, "cells per frame")
        ->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "output corpus path");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep with per-bandwidth CSVs");
    std::string corpus_path;
    std::string algorithm_sel = "both";
    std::string bandwidths = "10M,100M,1G,10G";
    std::string quantized_sel = "both";
    std::string mode_sel = "patchwise";
    std::string sweep_out = "sweep.csv";
    int reps = 5;
    bool analytic = false;
    sweep_cmd->add_option("--corpus", corpus_path, "corpus file")->required();
    sweep_cmd->add_option("--algorithm", algorithm_sel, "lz4, zstd or both")
        ->check(CLI::IsMember({"lz4", "zstd", "both"}));
    sweep_cmd->add_option("--bandwidths", bandwidths, "comma list, SI suffixes (10M,1G)");
    sweep_cmd->add_option("--quantized", quantized_sel, "no, yes or both")
        ->check(CLI::IsMember({"no", "yes", "both"}));
    sweep_cmd->add_option("--mode", mode_sel, "patchwise or full")
        ->check(CLI::IsMember({"patchwise", "full"}));
    sweep_cmd->add_option("--out", sweep_out, "output CSV path (bandwidth suffix added)");
    sweep_cmd->add_option("--reps", reps, "timing repetitions per stage")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--analytic", analytic,
                        "zero measured components; sizes and t_trans only (reproducible)");

    // optimal
    auto* optimal_cmd = app.add_subcommand("optimal", "optimal-parameter table");
    std::string optimal_out;
    optimal_cmd->add_option("--corpus", corpus_path, "corpus file")->required();
    optimal_cmd->add_option("--bandwidths", bandwidths, "comma list, SI suffixes");
    optimal_cmd->add_option("--quantized", quantized_sel, "no, yes or both")
        ->check(CLI::IsMember({"no", "yes", "both"}));
    optimal_cmd->add_option("--out", optimal_out, "optional CSV path");
    optimal_cmd->add_option("--reps", reps, "timing repetitions per stage")
        ->check(CLI::PositiveNumber);
    optimal_cmd->add_flag("--analytic", analytic, "zero measured components");

    // crossover
    auto* crossover_cmd = app.add_subcommand("crossover", "find the Zstd/LZ4 switch bandwidth");
    std::string crossover_out;
    crossover_cmd->add_option("--corpus", corpus_path, "corpus file")->required();
    crossover_cmd->add_option("--quantized", quantized_sel, "no, yes or both")
        ->check(CLI::IsMember({"no", "yes", "both"}));
    crossover_cmd->add_option("--out", crossover_out, "optional CSV path");
    crossover_cmd->add_option("--reps", reps, "timing repetitions per stage")
        ->check(CLI::PositiveNumber);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "shaped-channel transport evaluation");
    std::string preset_sel;
    std::string eval_out;
    int messages = 50;
    eval_cmd->add_option("--corpus", corpus_path, "corpus file")->required();
    eval_cmd->add_option("--preset", preset_sel, "v2x or dpu")
        ->required()
        ->check(CLI::IsMember({"v2x", "dpu"}));
    eval_cmd->add_option("--messages", messages, "messages per codec cell")
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out", eval_out, "output CSV path");
    eval_cmd->add_option("--reps", reps, "timing repetitions for parameter selection")
        ->check(CLI::PositiveNumber);

    // roundtrip
    auto* roundtrip_cmd = app.add_subcommand("roundtrip", "corpus-wide losslessness check");
    roundtrip_cmd->add_option("--corpus", corpus_path, "corpus file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            base.subcommand = "gen";
            return cmd_gen(base, seed, frames, target_cells, gen_out);
        }
        if (sweep_cmd->parsed()) {
            base.subcommand = "sweep";
            return cmd_sweep(base, corpus_path, algorithm_sel, bandwidths, quantized_sel,
                             mode_sel, sweep_out, reps, analytic);
        }
        if (optimal_cmd->parsed()) {
            base.subcommand = "optimal";
            return cmd_optimal(base, corpus_path, bandwidths, quantized_sel, optimal_out, reps,
                               analytic);
        }
        if (crossover_cmd->parsed()) {
            base.subcommand = "crossover";
            return cmd_crossover(base, corpus_path, quantized_sel, crossover_out, reps);
        }
        if (eval_cmd->parsed()) {
            base.subcommand = "eval";
            return cmd_eval(base, corpus_path, preset_sel, messages, eval_out, reps);
        }
        if (roundtrip_cmd->parsed()) {
            return cmd_roundtrip(corpus_path);
        }
    } catch (const apgm::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
