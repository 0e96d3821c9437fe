#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "apgm/codec.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/quantize.hpp"

namespace apgm {

// Message layout (all fields little-endian).
//
// Inner body ("APGM"):
//   magic[4] version:u8 flags:u8 codec:u8 param:i32 base_rate:f32
//   timestamp:u64 frame_id_len:u8 frame_id[] patch_count:u32
//   per patch: patch_id:u64 origin_x:f64 origin_y:f64 cell_size:f32
//              cells_per_side:u32 payload_len:u32 payload[]
//   flags: bit0 = quantized, bit1 = patch-wise compressed payloads.
//
// Full-message envelope ("APGC"):
//   magic[4] codec:u8 param:i32 uncompressed_len:u64 blob[]
//   where blob = compress(codec, inner body with codec None).

inline constexpr char kInnerMagic[4] = {'A', 'P', 'G', 'M'};
inline constexpr char kEnvelopeMagic[4] = {'A', 'P', 'G', 'C'};
inline constexpr std::uint8_t kWireVersion = 1;

enum class WireMode : std::uint8_t { Full = 0, PatchWise = 1 };

const char* mode_name(WireMode mode);

/// Complete on-wire encoding including headers. `bytes` starts with the
/// 4-byte magic of its mode.
struct WireMessage {
    WireMode mode = WireMode::PatchWise;
    CodecSpec spec;
    bool quantized = false;
    Bytes bytes;
};

/// Decoded message content: the originating grid (unquantized mode) or its
/// quantized view, reconstructed exactly.
struct Decoded {
    WireMode mode = WireMode::PatchWise;
    CodecSpec spec;
    bool quantized = false;
    std::variant<GridMap, QuantizedGridMap> content;

    const GridMap& grid() const { return std::get<GridMap>(content); }
    const QuantizedGridMap& qgrid() const { return std::get<QuantizedGridMap>(content); }
};

/// Compresses each patch payload independently, then serializes the message
/// around the compressed payloads. PNG is legal only here.
WireMessage encode_patchwise(const GridMap& grid, const CodecSpec& spec, bool quantized);

/// Serializes the whole grid uncompressed, compresses that body once and
/// wraps it in the envelope. PNG is rejected (UnsupportedError).
WireMessage encode_full(const GridMap& grid, const CodecSpec& spec, bool quantized);

Decoded decode(const WireMessage& msg);
Decoded decode(const Bytes& bytes);

/// message size == fixed_header + patch_headers + payload, exactly.
struct SizeBreakdown {
    std::uint64_t fixed_header = 0;
    std::uint64_t patch_headers = 0;
    std::uint64_t payload = 0;

    std::uint64_t total() const { return fixed_header + patch_headers + payload; }
};

SizeBreakdown message_size_breakdown(const Bytes& bytes);

// ---------------------------------------------------------------------------
// Staged pipeline surface. The composed encode/decode calls above are thin
// wrappers over these; the latency model times each stage separately.

/// Structural metadata shared by the normal and quantized representations.
struct PatchInfo {
    std::uint64_t patch_id = 0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    float cell_size = 0.0f;
    std::uint32_t cells_per_side = 0;
};

struct GridInfo {
    float base_rate = 0.5f;
    std::uint64_t timestamp_ns = 0;
    std::string frame_id;
    std::vector<PatchInfo> patches;
};

GridInfo grid_info(const GridMap& grid);
GridInfo grid_info(const QuantizedGridMap& qgrid);

/// Raw per-patch cell payloads: row-major cells, 8 bytes (two f32) normal,
/// 2 bytes quantized, little-endian. This is the representation the grids
/// are assumed to already live in; packing is preparation, not a timed
/// pipeline stage.
std::vector<Bytes> pack_patch_payloads(const GridMap& grid);
std::vector<Bytes> pack_patch_payloads(const QuantizedGridMap& qgrid);

std::vector<Bytes> compress_patch_payloads(const CodecSpec& spec, const GridInfo& info,
                                           bool quantized, const std::vector<Bytes>& payloads);

/// Serializes header + per-patch payloads into one message body.
/// `patchwise` sets flag bit1 and records `spec` as the payload codec;
/// the inner body of a full-mode message uses spec None and patchwise=false.
Bytes assemble_message(const GridInfo& info, const CodecSpec& spec, bool quantized,
                       bool patchwise, const std::vector<Bytes>& payloads);

/// Parsed inner body: headers plus offsets of the (possibly compressed)
/// payloads inside `bytes`. Holds a pointer into the parsed buffer.
struct ParsedMessage {
    GridInfo info;
    CodecSpec spec;
    bool quantized = false;
    bool patchwise = false;
    std::vector<std::pair<std::size_t, std::size_t>> payload_spans;  // offset, length
    const Bytes* bytes = nullptr;
};

ParsedMessage parse_message(const Bytes& bytes);

/// Decompresses every payload and rebuilds the grid, validating cell
/// invariants (DataError on violation).
Decoded materialize(const ParsedMessage& parsed, WireMode mode,
                    const CodecSpec& reported_spec);

Bytes serialize_inner(const GridMap& grid);
Bytes serialize_inner(const QuantizedGridMap& qgrid);

/// Compresses the inner body and wraps it in the envelope header.
Bytes envelope_wrap(const CodecSpec& spec, const Bytes& inner);

struct EnvelopeView {
    CodecSpec spec;
    std::uint64_t uncompressed_len = 0;
    std::size_t blob_offset = 0;
    const Bytes* bytes = nullptr;
};

EnvelopeView parse_envelope(const Bytes& bytes);
Bytes decompress_envelope(const EnvelopeView& view);

// ---------------------------------------------------------------------------
// Container file: length-prefixed (u64 LE) concatenation of WireMessages.
// Used for corpus dumps, captures and golden fixtures.

void write_container(const std::string& path, const std::vector<WireMessage>& messages);
std::vector<Bytes> read_container_raw(const std::string& path);

/// Corpus convenience: one unquantized patch-wise codec-None message per frame.
void write_corpus_file(const std::string& path, const std::vector<GridMap>& frames);
std::vector<GridMap> read_corpus_file(const std::string& path);

}  // namespace apgm
