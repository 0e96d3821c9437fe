#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apgm/opinion.hpp"

namespace apgm {

/// Square block of cells at one resolution. Cells are stored row-major,
/// cells.size() == cells_per_side^2. The physical side length is
/// cell_size * cells_per_side meters.
struct Patch {
    std::uint64_t patch_id = 0;
    double origin_x = 0.0;  // meters, map frame
    double origin_y = 0.0;
    float cell_size = 0.0f;  // meters per cell side
    std::uint32_t cells_per_side = 0;
    std::vector<BinomialOpinion> cells;

    bool operator==(const Patch&) const = default;
};

/// Patched occupancy grid map. The occupancy prior (base rate) is shared by
/// all cells and stored once per map.
struct GridMap {
    float base_rate = 0.5f;
    std::vector<Patch> patches;
    std::uint64_t timestamp_ns = 0;
    std::string frame_id;

    bool operator==(const GridMap&) const = default;
};

/// Target composition of a synthetic frame. Fractions refer to cell counts
/// and must sum to 1: free cells carry high disbelief, occupied cells high
/// belief, unknown cells are all-zero, speckle cells get independent random
/// masses.
struct OccupancyMix {
    double free = 0.48;
    double occupied = 0.16;
    double unknown = 0.35;
    double speckle = 0.01;

    bool operator==(const OccupancyMix&) const = default;
};

struct CorpusConfig {
    std::uint64_t seed = 0;
    std::uint64_t target_cells = 350000;
    std::vector<double> resolutions = {0.10, 0.20, 0.40};  // meters, increasing
    double patch_side_m = 16.0;
    OccupancyMix occupancy_mix;

    bool operator==(const CorpusConfig&) const = default;
};

/// Throws ConfigError when fractions are negative, do not sum to 1 (1e-9),
/// or resolutions are not strictly increasing and positive.
void validate_config(const CorpusConfig& config);

/// Sum of cells_per_side^2 over all patches.
std::uint64_t total_cells(const GridMap& grid);

/// Cell payload size, excluding any headers: 8 bytes per cell normally,
/// 2 bytes per cell quantized.
std::uint64_t payload_bytes(const GridMap& grid, bool quantized);
std::uint64_t payload_bytes_for_cells(std::uint64_t cells, bool quantized);

/// Deterministic synthetic corpus generator. Frames are a pure function of
/// (config, frames): re-running with the same arguments yields bit-identical
/// maps on every platform. Each frame hits target_cells within +-10% and is
/// spatially coherent (free corridors, occupied blobs, unknown background)
/// so compression ratios behave like recorded data rather than noise.
std::vector<GridMap> generate_corpus(const CorpusConfig& config, std::uint64_t frames);

}  // namespace apgm
