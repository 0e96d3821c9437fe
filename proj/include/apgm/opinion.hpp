#pragma once

#include <cstdint>

namespace apgm {

/// Per-cell occupancy evidence. Belief collects evidence for "occupied",
/// disbelief for "free"; the uncertainty mass u = 1 - b - d is implied and
/// never stored. Masses are kept as 32-bit floats, 8 bytes per cell.
struct BinomialOpinion {
    float belief = 0.0f;
    float disbelief = 0.0f;

    bool operator==(const BinomialOpinion&) const = default;
};

/// True iff both masses lie in [0,1] and their sum does not exceed 1.
inline bool opinion_valid(const BinomialOpinion& o) {
    if (!(o.belief >= 0.0f && o.belief <= 1.0f)) return false;
    if (!(o.disbelief >= 0.0f && o.disbelief <= 1.0f)) return false;
    return static_cast<double>(o.belief) + static_cast<double>(o.disbelief) <= 1.0;
}

/// 1-byte-per-mass quantized cell. Invariant: belief_q + disbelief_q <= 255.
struct QuantizedCell {
    std::uint8_t belief_q = 0;
    std::uint8_t disbelief_q = 0;

    bool operator==(const QuantizedCell&) const = default;
};

}  // namespace apgm
