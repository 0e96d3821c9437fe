#include "apgm/grid_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <utility>

#include "apgm/error.hpp"
#include "apgm/rng.hpp"

namespace apgm {
namespace {

constexpr std::uint64_t kBaseTimestampNs = 1700000000ull * 1000000000ull;
constexpr std::uint64_t kFramePeriodNs = 100000000ull;  // 10 Hz map stream

// Hash stream tags so every random draw comes from its own keyed stream.
enum Tag : std::uint64_t {
    kTagFrame = 0x31,
    kTagFieldCoarse = 0x32,
    kTagFieldFine = 0x33,
    kTagPlateau = 0x34,
    kTagTexture = 0x35,
    kTagTextureValue = 0x36,
    kTagCorridor = 0x37,
    kTagSpeckleField = 0x38,
    kTagSpeckleMass = 0x39,
};

// Bilinear value noise over a unit lattice. Coordinates are biased so the
// lattice indices stay non-negative around the map origin.
double value_noise(std::uint64_t seed, double x, double y) {
    constexpr double kBias = 1 << 20;
    const double bx = x + kBias;
    const double by = y + kBias;
    const auto x0 = static_cast<std::uint64_t>(bx);
    const auto y0 = static_cast<std::uint64_t>(by);
    const double fx = bx - static_cast<double>(x0);
    const double fy = by - static_cast<double>(y0);
    const double n00 = hash_unit(seed, x0, y0);
    const double n10 = hash_unit(seed, x0 + 1, y0);
    const double n01 = hash_unit(seed, x0, y0 + 1);
    const double n11 = hash_unit(seed, x0 + 1, y0 + 1);
    const double nx0 = n00 + (n10 - n00) * fx;
    const double nx1 = n01 + (n11 - n01) * fx;
    return nx0 + (nx1 - nx0) * fy;
}

struct LayoutSlot {
    double origin_x;
    double origin_y;
    std::uint32_t cells_per_side;
    float cell_size;
};

// Square spiral over integer lattice slots: (0,0), then ring 1, ring 2, ...
std::pair<std::int64_t, std::int64_t> spiral_slot(std::uint64_t k) {
    if (k == 0) return {0, 0};
    std::uint64_t ring = 1;
    std::uint64_t count = 1;
    while (k >= count + 8 * ring) {
        count += 8 * ring;
        ++ring;
    }
    const std::uint64_t pos = k - count;       // 0 .. 8*ring-1
    const std::uint64_t side = pos / (2 * ring);  // 0..3
    const auto offset = static_cast<std::int64_t>(pos % (2 * ring));
    const auto r = static_cast<std::int64_t>(ring);
    switch (side) {
        case 0: return {r, -r + 1 + offset};   // right edge, upward
        case 1: return {r - 1 - offset, r};    // top edge, leftward
        case 2: return {-r, r - 1 - offset};   // left edge, downward
        default: return {-r + 1 + offset, -r};  // bottom edge, rightward
    }
}

// Fixed patch layout for a config: finest patches take the slots closest to
// the origin, coarser resolutions fill outward rings. The paper does not
// state patch dimensions or per-resolution counts, so this layout is a
// deterministic stand-in tuned to hit target_cells.
std::vector<LayoutSlot> plan_layout(const CorpusConfig& config) {
    const std::size_t res_count = config.resolutions.size();
    std::vector<std::uint32_t> cps(res_count);
    std::vector<std::uint64_t> cells_per_patch(res_count);
    for (std::size_t i = 0; i < res_count; ++i) {
        const auto side = static_cast<std::uint32_t>(
            std::llround(config.patch_side_m / config.resolutions[i]));
        if (side == 0) throw ConfigError("patch_side_m too small for resolution");
        cps[i] = side;
        cells_per_patch[i] = static_cast<std::uint64_t>(side) * side;
    }

    // Cell-share weights 2^(R-1-i) favor the finest resolution, mirroring
    // dense coverage close to the vehicle.
    std::vector<double> weights(res_count);
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < res_count; ++i) {
        weights[i] = static_cast<double>(1ull << (res_count - 1 - i));
        weight_sum += weights[i];
    }

    const auto target = static_cast<double>(config.target_cells);
    std::vector<std::uint64_t> counts(res_count, 0);
    std::uint64_t allocated = 0;
    for (std::size_t i = 0; i + 1 < res_count; ++i) {
        counts[i] = static_cast<std::uint64_t>(
            std::floor(weights[i] / weight_sum * target / static_cast<double>(cells_per_patch[i])));
        allocated += counts[i] * cells_per_patch[i];
    }
    const std::size_t last = res_count - 1;
    const double remaining = target - static_cast<double>(allocated);
    counts[last] = remaining > 0.0
                       ? static_cast<std::uint64_t>(
                             std::llround(remaining / static_cast<double>(cells_per_patch[last])))
                       : 0;

    std::uint64_t total = 0;
    for (std::size_t i = 0; i < res_count; ++i) total += counts[i] * cells_per_patch[i];

    // Nudge with coarse patches while it improves the fit.
    auto err = [&](std::uint64_t t) {
        return std::llabs(static_cast<long long>(t) - static_cast<long long>(config.target_cells));
    };
    while (err(total + cells_per_patch[last]) < err(total)) {
        ++counts[last];
        total += cells_per_patch[last];
    }
    while (counts[last] > 0 && err(total - cells_per_patch[last]) < err(total)) {
        --counts[last];
        total -= cells_per_patch[last];
    }

    if (total == 0 ||
        static_cast<double>(err(total)) > 0.10 * static_cast<double>(config.target_cells)) {
        throw ConfigError("patch geometry cannot reach target_cells within 10% tolerance");
    }

    std::vector<LayoutSlot> slots;
    std::uint64_t slot_index = 0;
    for (std::size_t i = 0; i < res_count; ++i) {
        for (std::uint64_t n = 0; n < counts[i]; ++n) {
            const auto [gx, gy] = spiral_slot(slot_index++);
            slots.push_back({static_cast<double>(gx) * config.patch_side_m,
                             static_cast<double>(gy) * config.patch_side_m, cps[i],
                             static_cast<float>(config.resolutions[i])});
        }
    }
    return slots;
}

struct SceneParams {
    std::uint64_t frame_seed;
    double corridor_y;       // horizontal free corridor
    double corridor_x;       // vertical free corridor
    double corridor_half_w;
};

// Spatial classification score; low values become free space. Corridors cut
// strongly negative bands through the noise so free space stays contiguous.
double class_field(const SceneParams& scene, double x, double y) {
    const double coarse = value_noise(mix64(scene.frame_seed, kTagFieldCoarse), x / 11.0, y / 11.0);
    const double fine = value_noise(mix64(scene.frame_seed, kTagFieldFine), x / 3.0, y / 3.0);
    double field = 0.62 * coarse + 0.38 * fine;
    const bool corridor = std::abs(y - scene.corridor_y) < scene.corridor_half_w ||
                          std::abs(x - scene.corridor_x) < scene.corridor_half_w;
    if (corridor) field -= 0.75;
    return field;
}

// Evidence magnitudes: wide saturated plateaus produce the long exact-value
// runs recorded maps show; texture zones draw from a per-cell alphabet of
// mixed-evidence values (fringes), which is where match-search effort pays
// off and the codec parameters differentiate. The minor mass is small but
// nonzero, banded like the major one.
constexpr double kFreePlateaus[4] = {0.97, 0.90, 0.82, 0.74};
constexpr double kOccupiedPlateaus[4] = {0.95, 0.88, 0.80, 0.72};
constexpr double kMinorMass[4] = {0.010, 0.015, 0.020, 0.025};
constexpr int kTextureAlphabet = 32768;
constexpr double kTextureStep = 7.2e-6;
constexpr double kTextureThreshold = 0.74;

}  // namespace

void validate_config(const CorpusConfig& config) {
    const OccupancyMix& m = config.occupancy_mix;
    const double parts[4] = {m.free, m.occupied, m.unknown, m.speckle};
    double sum = 0.0;
    for (double p : parts) {
        if (p < 0.0) throw ConfigError("occupancy_mix fractions must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("occupancy_mix fractions must sum to 1");
    if (config.resolutions.empty()) throw ConfigError("at least one resolution required");
    double prev = 0.0;
    for (double r : config.resolutions) {
        if (r <= prev) throw ConfigError("resolutions must be strictly positive and increasing");
        prev = r;
    }
    if (config.patch_side_m <= 0.0) throw ConfigError("patch_side_m must be positive");
    if (config.target_cells == 0) throw ConfigError("target_cells must be positive");
}

std::uint64_t total_cells(const GridMap& grid) {
    std::uint64_t total = 0;
    for (const Patch& p : grid.patches) {
        total += static_cast<std::uint64_t>(p.cells_per_side) * p.cells_per_side;
    }
    return total;
}

std::uint64_t payload_bytes_for_cells(std::uint64_t cells, bool quantized) {
    return cells * (quantized ? 2ull : 8ull);
}

std::uint64_t payload_bytes(const GridMap& grid, bool quantized) {
    return payload_bytes_for_cells(total_cells(grid), quantized);
}

std::vector<GridMap> generate_corpus(const CorpusConfig& config, std::uint64_t frames) {
    validate_config(config);
    if (frames < 1) throw ConfigError("frames must be >= 1");

    const std::vector<LayoutSlot> slots = plan_layout(config);
    const OccupancyMix& mix = config.occupancy_mix;
    const double geom_total = mix.free + mix.occupied + mix.unknown;
    const double q_free = geom_total > 0.0 ? mix.free / geom_total : 0.0;
    const double q_occ = geom_total > 0.0 ? (mix.free + mix.occupied) / geom_total : 0.0;

    std::vector<GridMap> corpus;
    corpus.reserve(frames);

    for (std::uint64_t f = 0; f < frames; ++f) {
        const std::uint64_t frame_seed = mix64(config.seed, kTagFrame, f);
        SceneParams scene{};
        scene.frame_seed = frame_seed;
        {
            SplitMix64 rng(mix64(frame_seed, kTagCorridor));
            const double extent =
                config.patch_side_m * (1.0 + std::sqrt(static_cast<double>(slots.size())));
            scene.corridor_y = (rng.next_unit() - 0.5) * 0.5 * extent;
            scene.corridor_x = (rng.next_unit() - 0.5) * 0.5 * extent;
            scene.corridor_half_w = 2.5 + 2.0 * rng.next_unit();
        }

        GridMap grid;
        grid.base_rate = 0.5f;
        grid.timestamp_ns = kBaseTimestampNs + f * kFramePeriodNs;
        grid.frame_id = "apgm";
        grid.patches.resize(slots.size());

        // Pass 1: classification and speckle-placement scores, frame-wide.
        std::uint64_t cell_total = 0;
        for (const LayoutSlot& s : slots) {
            cell_total += static_cast<std::uint64_t>(s.cells_per_side) * s.cells_per_side;
        }
        std::vector<std::pair<float, std::uint32_t>> scored;
        std::vector<std::pair<float, std::uint32_t>> speckle_scored;
        scored.reserve(cell_total);
        speckle_scored.reserve(cell_total);
        const std::uint64_t speckle_seed = mix64(frame_seed, kTagSpeckleField);
        std::uint32_t gid = 0;
        for (const LayoutSlot& s : slots) {
            const double cs = s.cell_size;
            for (std::uint32_t row = 0; row < s.cells_per_side; ++row) {
                const double cy = s.origin_y + (row + 0.5) * cs;
                for (std::uint32_t col = 0; col < s.cells_per_side; ++col) {
                    const double cx = s.origin_x + (col + 0.5) * cs;
                    scored.emplace_back(static_cast<float>(class_field(scene, cx, cy)), gid);
                    speckle_scored.emplace_back(
                        static_cast<float>(value_noise(speckle_seed, cx / 1.8, cy / 1.8)), gid);
                    ++gid;
                }
            }
        }

        // Rank cells by score; the lowest q_free fraction becomes free, the
        // next occupied, the rest unknown. Rank-based thresholds keep the
        // requested mix exact regardless of the score distribution. Speckle
        // takes the lowest ranks of its own field, which clumps it into small
        // blobs instead of shredding runs cell by cell.
        std::vector<std::uint32_t> cls(cell_total, 2);  // 0 free, 1 occupied, 2 unknown
        std::vector<std::uint8_t> is_speckle(cell_total, 0);
        {
            std::sort(scored.begin(), scored.end());
            const auto n_free = static_cast<std::uint64_t>(
                std::llround(q_free * static_cast<double>(cell_total)));
            const auto n_occ = static_cast<std::uint64_t>(
                std::llround(q_occ * static_cast<double>(cell_total)));
            for (std::uint64_t r = 0; r < cell_total; ++r) {
                cls[scored[r].second] = r < n_free ? 0u : (r < n_occ ? 1u : 2u);
            }
            const auto n_speckle = static_cast<std::uint64_t>(
                std::llround(mix.speckle * static_cast<double>(cell_total)));
            if (n_speckle > 0) {
                std::sort(speckle_scored.begin(), speckle_scored.end());
                for (std::uint64_t r = 0; r < n_speckle; ++r) {
                    is_speckle[speckle_scored[r].second] = 1;
                }
            }
        }

        // Pass 2: populate cells.
        gid = 0;
        for (std::size_t pi = 0; pi < slots.size(); ++pi) {
            const LayoutSlot& s = slots[pi];
            Patch& patch = grid.patches[pi];
            patch.patch_id = pi;
            patch.origin_x = s.origin_x;
            patch.origin_y = s.origin_y;
            patch.cell_size = s.cell_size;
            patch.cells_per_side = s.cells_per_side;
            patch.cells.resize(static_cast<std::size_t>(s.cells_per_side) * s.cells_per_side);

            const double cs = s.cell_size;
            std::size_t idx = 0;
            for (std::uint32_t row = 0; row < s.cells_per_side; ++row) {
                const double cy = s.origin_y + (row + 0.5) * cs;
                for (std::uint32_t col = 0; col < s.cells_per_side; ++col, ++idx, ++gid) {
                    const double cx = s.origin_x + (col + 0.5) * cs;
                    BinomialOpinion& cell = patch.cells[idx];

                    if (is_speckle[gid]) {
                        const double u1 = hash_unit(mix64(frame_seed, kTagSpeckleMass, 1), gid);
                        const double u2 = hash_unit(mix64(frame_seed, kTagSpeckleMass, 2), gid);
                        const double b = u1 * 0.7;
                        const double d = u2 * (1.0 - b) * 0.98;
                        cell.belief = static_cast<float>(b);
                        cell.disbelief = static_cast<float>(d);
                        continue;
                    }

                    const std::uint32_t c = cls[gid];
                    if (c == 2) continue;  // unknown: (0, 0)

                    const double plateau_noise =
                        value_noise(mix64(frame_seed, kTagPlateau), cx / 13.0, cy / 13.0);
                    const int band = std::min(3, static_cast<int>(plateau_noise * 4.0));
                    double magnitude = c == 0 ? kFreePlateaus[band] : kOccupiedPlateaus[band];
                    const double texture =
                        value_noise(mix64(frame_seed, kTagTexture), cx / 5.0, cy / 5.0);
                    if (texture > kTextureThreshold) {
                        const int k = static_cast<int>(
                            mix64(mix64(frame_seed, kTagTextureValue), gid) % kTextureAlphabet);
                        magnitude -= k * kTextureStep;
                    }
                    if (c == 0) {
                        cell.belief = static_cast<float>(kMinorMass[band]);
                        cell.disbelief = static_cast<float>(magnitude);
                    } else {
                        cell.belief = static_cast<float>(magnitude);
                        cell.disbelief = static_cast<float>(kMinorMass[band]);
                    }
                }
            }
        }
        corpus.push_back(std::move(grid));
    }
    return corpus;
}

}  // namespace apgm
