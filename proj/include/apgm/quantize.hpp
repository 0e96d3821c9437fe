#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apgm/grid_map.hpp"
#include "apgm/opinion.hpp"

namespace apgm {

/// Quantization step of the uniform 1-byte quantizer over [0,1].
inline constexpr double kQuantStep = 1.0 / 255.0;

/// Maximum scalar reconstruction error, step/2.
inline constexpr double kQuantMaxError = 1.0 / 510.0;

/// Round-to-nearest level in [0,255], ties away from zero.
/// Throws ConfigError for masses outside [0,1].
std::uint8_t quantize_mass(double mass);

/// Reconstruction value q * step. |dequantize(quantize(m)) - m| <= step/2.
double dequantize_mass(std::uint8_t level);

struct QuantizedPatch {
    std::uint64_t patch_id = 0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    float cell_size = 0.0f;
    std::uint32_t cells_per_side = 0;
    std::vector<QuantizedCell> cells;

    bool operator==(const QuantizedPatch&) const = default;
};

/// Quantized view of a GridMap: identical structure and metadata, 2-byte cells.
struct QuantizedGridMap {
    float base_rate = 0.5f;
    std::vector<QuantizedPatch> patches;
    std::uint64_t timestamp_ns = 0;
    std::string frame_id;

    bool operator==(const QuantizedGridMap&) const = default;
};

/// Quantizes every cell. Independent rounding of both masses can land at
/// belief_q + disbelief_q == 256 near the additivity boundary, so the
/// disbelief level is clamped to 255 - belief_q; the clamp widens the
/// disbelief error to at most 3/2 steps inside that boundary band.
QuantizedGridMap quantize_grid(const GridMap& grid);

/// Reconstructs masses as level/255. Every output cell satisfies the
/// BinomialOpinion invariants exactly, including float rounding at the
/// b + d == 1 boundary.
GridMap dequantize_grid(const QuantizedGridMap& qgrid);

std::uint64_t total_cells(const QuantizedGridMap& qgrid);

}  // namespace apgm
