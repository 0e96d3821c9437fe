#include "apgm/quantize.hpp"

#include <cmath>

#include "apgm/error.hpp"

namespace apgm {

std::uint8_t quantize_mass(double mass) {
    if (!(mass >= 0.0 && mass <= 1.0)) {
        throw ConfigError("mass outside [0,1] cannot be quantized");
    }
    // round-to-nearest, ties away from zero
    const long level = std::lround(mass * 255.0);
    return static_cast<std::uint8_t>(level < 0 ? 0 : (level > 255 ? 255 : level));
}

double dequantize_mass(std::uint8_t level) {
    return static_cast<double>(level) / 255.0;
}

namespace {

QuantizedCell quantize_cell(const BinomialOpinion& o) {
    QuantizedCell q;
    q.belief_q = quantize_mass(o.belief);
    const std::uint8_t d = quantize_mass(o.disbelief);
    const std::uint8_t cap = static_cast<std::uint8_t>(255 - q.belief_q);
    q.disbelief_q = d < cap ? d : cap;
    return q;
}

BinomialOpinion dequantize_cell(const QuantizedCell& q) {
    BinomialOpinion o;
    o.belief = static_cast<float>(dequantize_mass(q.belief_q));
    o.disbelief = static_cast<float>(dequantize_mass(q.disbelief_q));
    // Independent float rounding of the two masses can push the sum a hair
    // above 1 when belief_q + disbelief_q == 255; step disbelief down until
    // the additivity invariant holds exactly.
    while (static_cast<double>(o.belief) + static_cast<double>(o.disbelief) > 1.0) {
        o.disbelief = std::nextafterf(o.disbelief, 0.0f);
    }
    return o;
}

}  // namespace

QuantizedGridMap quantize_grid(const GridMap& grid) {
    QuantizedGridMap out;
    out.base_rate = grid.base_rate;
    out.timestamp_ns = grid.timestamp_ns;
    out.frame_id = grid.frame_id;
    out.patches.reserve(grid.patches.size());
    for (const Patch& p : grid.patches) {
        QuantizedPatch qp;
        qp.patch_id = p.patch_id;
        qp.origin_x = p.origin_x;
        qp.origin_y = p.origin_y;
        qp.cell_size = p.cell_size;
        qp.cells_per_side = p.cells_per_side;
        qp.cells.reserve(p.cells.size());
        for (const BinomialOpinion& cell : p.cells) qp.cells.push_back(quantize_cell(cell));
        out.patches.push_back(std::move(qp));
    }
    return out;
}

GridMap dequantize_grid(const QuantizedGridMap& qgrid) {
    GridMap out;
    out.base_rate = qgrid.base_rate;
    out.timestamp_ns = qgrid.timestamp_ns;
    out.frame_id = qgrid.frame_id;
    out.patches.reserve(qgrid.patches.size());
    for (const QuantizedPatch& qp : qgrid.patches) {
        Patch p;
        p.patch_id = qp.patch_id;
        p.origin_x = qp.origin_x;
        p.origin_y = qp.origin_y;
        p.cell_size = qp.cell_size;
        p.cells_per_side = qp.cells_per_side;
        p.cells.reserve(qp.cells.size());
        for (const QuantizedCell& cell : qp.cells) p.cells.push_back(dequantize_cell(cell));
        out.patches.push_back(std::move(p));
    }
    return out;
}

std::uint64_t total_cells(const QuantizedGridMap& qgrid) {
    std::uint64_t total = 0;
    for (const QuantizedPatch& p : qgrid.patches) {
        total += static_cast<std::uint64_t>(p.cells_per_side) * p.cells_per_side;
    }
    return total;
}

}  // namespace apgm
