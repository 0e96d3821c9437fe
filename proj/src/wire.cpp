#include "apgm/wire.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "apgm/error.hpp"

namespace apgm {
namespace {

constexpr std::uint8_t kFlagQuantized = 0x01;
constexpr std::uint8_t kFlagPatchwise = 0x02;

// --- little-endian primitives ---------------------------------------------

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void put_u32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(Bytes& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_i32(Bytes& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }
void put_f32(Bytes& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    explicit Reader(const Bytes& bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n) const {
        if (remaining() < n) throw IntegrityError("message truncated");
    }

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }

    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void bytes_into(std::uint8_t* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }

private:
    const Bytes& bytes_;
    std::size_t pos_ = 0;
};

bool magic_is(const Bytes& bytes, const char (&magic)[4]) {
    return bytes.size() >= 4 && std::memcmp(bytes.data(), magic, 4) == 0;
}

std::uint8_t codec_id(Algorithm a) { return static_cast<std::uint8_t>(a); }

Algorithm algorithm_from_id(std::uint8_t id) {
    if (id > static_cast<std::uint8_t>(Algorithm::PNG)) {
        throw FormatError("unknown codec id " + std::to_string(id));
    }
    return static_cast<Algorithm>(id);
}

std::uint32_t bytes_per_cell(bool quantized) { return quantized ? 2u : 8u; }

template <typename PatchT>
Bytes pack_one_payload(const PatchT& patch) {
    Bytes payload;
    const std::size_t n = patch.cells.size();
    if constexpr (std::is_same_v<PatchT, Patch>) {
        payload.reserve(n * 8);
        for (const BinomialOpinion& c : patch.cells) {
            put_f32(payload, c.belief);
            put_f32(payload, c.disbelief);
        }
    } else {
        payload.reserve(n * 2);
        for (const QuantizedCell& c : patch.cells) {
            payload.push_back(c.belief_q);
            payload.push_back(c.disbelief_q);
        }
    }
    return payload;
}

template <typename GridT>
GridInfo make_info(const GridT& grid) {
    GridInfo info;
    info.base_rate = grid.base_rate;
    info.timestamp_ns = grid.timestamp_ns;
    info.frame_id = grid.frame_id;
    info.patches.reserve(grid.patches.size());
    for (const auto& p : grid.patches) {
        info.patches.push_back({p.patch_id, p.origin_x, p.origin_y, p.cell_size,
                                p.cells_per_side});
    }
    return info;
}

void unpack_cells_normal(Patch& patch, const std::uint8_t* data, std::size_t len) {
    const std::size_t n = len / 8;
    patch.cells.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t b = 0;
        std::uint32_t d = 0;
        std::memcpy(&b, data + i * 8, 4);
        std::memcpy(&d, data + i * 8 + 4, 4);
        if constexpr (std::endian::native == std::endian::big) {
            b = __builtin_bswap32(b);
            d = __builtin_bswap32(d);
        }
        patch.cells[i].belief = std::bit_cast<float>(b);
        patch.cells[i].disbelief = std::bit_cast<float>(d);
        if (!opinion_valid(patch.cells[i])) {
            throw DataError("decoded cell violates opinion invariants");
        }
    }
}

void unpack_cells_quantized(QuantizedPatch& patch, const std::uint8_t* data, std::size_t len) {
    const std::size_t n = len / 2;
    patch.cells.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        patch.cells[i].belief_q = data[i * 2];
        patch.cells[i].disbelief_q = data[i * 2 + 1];
        if (static_cast<unsigned>(patch.cells[i].belief_q) + patch.cells[i].disbelief_q > 255) {
            throw DataError("decoded quantized cell violates additivity");
        }
    }
}

}  // namespace

const char* mode_name(WireMode mode) {
    return mode == WireMode::Full ? "full" : "patchwise";
}

GridInfo grid_info(const GridMap& grid) { return make_info(grid); }
GridInfo grid_info(const QuantizedGridMap& qgrid) { return make_info(qgrid); }

std::vector<Bytes> pack_patch_payloads(const GridMap& grid) {
    std::vector<Bytes> payloads;
    payloads.reserve(grid.patches.size());
    for (const Patch& p : grid.patches) payloads.push_back(pack_one_payload(p));
    return payloads;
}

std::vector<Bytes> pack_patch_payloads(const QuantizedGridMap& qgrid) {
    std::vector<Bytes> payloads;
    payloads.reserve(qgrid.patches.size());
    for (const QuantizedPatch& p : qgrid.patches) payloads.push_back(pack_one_payload(p));
    return payloads;
}

std::vector<Bytes> compress_patch_payloads(const CodecSpec& spec, const GridInfo& info,
                                           bool quantized, const std::vector<Bytes>& payloads) {
    validate_spec(spec);
    if (payloads.size() != info.patches.size()) {
        throw ConfigError("payload count does not match patch count");
    }
    std::vector<Bytes> out;
    out.reserve(payloads.size());
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        PngLayout layout;
        if (spec.algorithm == Algorithm::PNG) {
            layout.row_stride_bytes = info.patches[i].cells_per_side * bytes_per_cell(quantized);
        }
        out.push_back(compress(spec, payloads[i], layout).data);
    }
    return out;
}

Bytes assemble_message(const GridInfo& info, const CodecSpec& spec, bool quantized,
                       bool patchwise, const std::vector<Bytes>& payloads) {
    if (payloads.size() != info.patches.size()) {
        throw ConfigError("payload count does not match patch count");
    }
    if (info.frame_id.size() > 255) throw ConfigError("frame_id longer than 255 bytes");
    if (info.patches.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError("too many patches for 32-bit count");
    }

    std::size_t size = 28 + info.frame_id.size();
    for (const Bytes& p : payloads) size += 36 + p.size();

    Bytes out;
    out.reserve(size);
    out.insert(out.end(), kInnerMagic, kInnerMagic + 4);
    put_u8(out, kWireVersion);
    std::uint8_t flags = 0;
    if (quantized) flags |= kFlagQuantized;
    if (patchwise) flags |= kFlagPatchwise;
    put_u8(out, flags);
    put_u8(out, codec_id(spec.algorithm));
    put_i32(out, spec.param);
    put_f32(out, info.base_rate);
    put_u64(out, info.timestamp_ns);
    put_u8(out, static_cast<std::uint8_t>(info.frame_id.size()));
    out.insert(out.end(), info.frame_id.begin(), info.frame_id.end());
    put_u32(out, static_cast<std::uint32_t>(info.patches.size()));

    for (std::size_t i = 0; i < info.patches.size(); ++i) {
        const PatchInfo& p = info.patches[i];
        const Bytes& payload = payloads[i];
        if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw ConfigError("patch payload exceeds 32-bit length field");
        }
        put_u64(out, p.patch_id);
        put_f64(out, p.origin_x);
        put_f64(out, p.origin_y);
        put_f32(out, p.cell_size);
        put_u32(out, p.cells_per_side);
        put_u32(out, static_cast<std::uint32_t>(payload.size()));
        out.insert(out.end(), payload.begin(), payload.end());
    }
    return out;
}

ParsedMessage parse_message(const Bytes& bytes) {
    if (!magic_is(bytes, kInnerMagic)) throw FormatError("bad message magic");
    Reader r(bytes);
    r.skip(4);
    const std::uint8_t version = r.u8();
    if (version != kWireVersion) {
        throw FormatError("unsupported wire version " + std::to_string(version));
    }
    ParsedMessage parsed;
    parsed.bytes = &bytes;
    const std::uint8_t flags = r.u8();
    parsed.quantized = (flags & kFlagQuantized) != 0;
    parsed.patchwise = (flags & kFlagPatchwise) != 0;
    parsed.spec.algorithm = algorithm_from_id(r.u8());
    parsed.spec.param = r.i32();
    validate_spec(parsed.spec);
    parsed.info.base_rate = r.f32();
    parsed.info.timestamp_ns = r.u64();
    const std::uint8_t fid_len = r.u8();
    parsed.info.frame_id.resize(fid_len);
    if (fid_len > 0) {
        r.bytes_into(reinterpret_cast<std::uint8_t*>(parsed.info.frame_id.data()), fid_len);
    }
    const std::uint32_t patch_count = r.u32();
    parsed.info.patches.reserve(patch_count);
    parsed.payload_spans.reserve(patch_count);
    for (std::uint32_t i = 0; i < patch_count; ++i) {
        PatchInfo p;
        p.patch_id = r.u64();
        p.origin_x = r.f64();
        p.origin_y = r.f64();
        p.cell_size = r.f32();
        p.cells_per_side = r.u32();
        const std::uint32_t payload_len = r.u32();
        parsed.payload_spans.emplace_back(r.pos(), payload_len);
        r.skip(payload_len);
        parsed.info.patches.push_back(p);
    }
    if (r.remaining() != 0) throw IntegrityError("trailing bytes after message");
    return parsed;
}

Decoded materialize(const ParsedMessage& parsed, WireMode mode, const CodecSpec& reported_spec) {
    Decoded decoded;
    decoded.mode = mode;
    decoded.spec = reported_spec;
    decoded.quantized = parsed.quantized;

    const std::uint32_t bpc = bytes_per_cell(parsed.quantized);
    const std::size_t n = parsed.info.patches.size();

    auto patch_payload = [&](std::size_t i) -> Bytes {
        const PatchInfo& p = parsed.info.patches[i];
        const auto [off, len] = parsed.payload_spans[i];
        const std::uint64_t raw_len =
            static_cast<std::uint64_t>(p.cells_per_side) * p.cells_per_side * bpc;
        CompressedBlock block;
        block.spec = parsed.spec;
        block.uncompressed_len = raw_len;
        block.data.assign(parsed.bytes->begin() + static_cast<std::ptrdiff_t>(off),
                          parsed.bytes->begin() + static_cast<std::ptrdiff_t>(off + len));
        return decompress(block);
    };

    if (parsed.quantized) {
        QuantizedGridMap grid;
        grid.base_rate = parsed.info.base_rate;
        grid.timestamp_ns = parsed.info.timestamp_ns;
        grid.frame_id = parsed.info.frame_id;
        grid.patches.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const PatchInfo& pi = parsed.info.patches[i];
            QuantizedPatch& p = grid.patches[i];
            p.patch_id = pi.patch_id;
            p.origin_x = pi.origin_x;
            p.origin_y = pi.origin_y;
            p.cell_size = pi.cell_size;
            p.cells_per_side = pi.cells_per_side;
            const Bytes raw = patch_payload(i);
            unpack_cells_quantized(p, raw.data(), raw.size());
        }
        decoded.content = std::move(grid);
    } else {
        GridMap grid;
        grid.base_rate = parsed.info.base_rate;
        grid.timestamp_ns = parsed.info.timestamp_ns;
        grid.frame_id = parsed.info.frame_id;
        grid.patches.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const PatchInfo& pi = parsed.info.patches[i];
            Patch& p = grid.patches[i];
            p.patch_id = pi.patch_id;
            p.origin_x = pi.origin_x;
            p.origin_y = pi.origin_y;
            p.cell_size = pi.cell_size;
            p.cells_per_side = pi.cells_per_side;
            const Bytes raw = patch_payload(i);
            unpack_cells_normal(p, raw.data(), raw.size());
        }
        decoded.content = std::move(grid);
    }
    return decoded;
}

Bytes serialize_inner(const GridMap& grid) {
    return assemble_message(grid_info(grid), CodecSpec::none(), false, false,
                            pack_patch_payloads(grid));
}

Bytes serialize_inner(const QuantizedGridMap& qgrid) {
    return assemble_message(grid_info(qgrid), CodecSpec::none(), true, false,
                            pack_patch_payloads(qgrid));
}

Bytes envelope_wrap(const CodecSpec& spec, const Bytes& inner) {
    validate_spec(spec);
    if (spec.algorithm == Algorithm::PNG) {
        throw UnsupportedError("png cannot compress a full message (patch-wise only)");
    }
    const CompressedBlock block = compress(spec, inner);
    Bytes out;
    out.reserve(17 + block.data.size());
    out.insert(out.end(), kEnvelopeMagic, kEnvelopeMagic + 4);
    put_u8(out, codec_id(spec.algorithm));
    put_i32(out, spec.param);
    put_u64(out, block.uncompressed_len);
    out.insert(out.end(), block.data.begin(), block.data.end());
    return out;
}

EnvelopeView parse_envelope(const Bytes& bytes) {
    if (!magic_is(bytes, kEnvelopeMagic)) throw FormatError("bad envelope magic");
    Reader r(bytes);
    r.skip(4);
    EnvelopeView view;
    view.spec.algorithm = algorithm_from_id(r.u8());
    view.spec.param = r.i32();
    validate_spec(view.spec);
    view.uncompressed_len = r.u64();
    view.blob_offset = r.pos();
    view.bytes = &bytes;
    return view;
}

Bytes decompress_envelope(const EnvelopeView& view) {
    CompressedBlock block;
    block.spec = view.spec;
    block.uncompressed_len = view.uncompressed_len;
    block.data.assign(view.bytes->begin() + static_cast<std::ptrdiff_t>(view.blob_offset),
                      view.bytes->end());
    return decompress(block);
}

WireMessage encode_patchwise(const GridMap& grid, const CodecSpec& spec, bool quantized) {
    WireMessage msg;
    msg.mode = WireMode::PatchWise;
    msg.spec = spec;
    msg.quantized = quantized;
    if (quantized) {
        const QuantizedGridMap qgrid = quantize_grid(grid);
        const GridInfo info = grid_info(qgrid);
        msg.bytes = assemble_message(
            info, spec, true, true,
            compress_patch_payloads(spec, info, true, pack_patch_payloads(qgrid)));
    } else {
        const GridInfo info = grid_info(grid);
        msg.bytes = assemble_message(
            info, spec, false, true,
            compress_patch_payloads(spec, info, false, pack_patch_payloads(grid)));
    }
    return msg;
}

WireMessage encode_full(const GridMap& grid, const CodecSpec& spec, bool quantized) {
    WireMessage msg;
    msg.mode = WireMode::Full;
    msg.spec = spec;
    msg.quantized = quantized;
    const Bytes inner = quantized ? serialize_inner(quantize_grid(grid)) : serialize_inner(grid);
    msg.bytes = envelope_wrap(spec, inner);
    return msg;
}

Decoded decode(const Bytes& bytes) {
    if (magic_is(bytes, kInnerMagic)) {
        const ParsedMessage parsed = parse_message(bytes);
        if (!parsed.patchwise) {
            throw FormatError("standalone message must carry the patch-wise flag");
        }
        return materialize(parsed, WireMode::PatchWise, parsed.spec);
    }
    if (magic_is(bytes, kEnvelopeMagic)) {
        const EnvelopeView view = parse_envelope(bytes);
        const Bytes inner = decompress_envelope(view);
        const ParsedMessage parsed = parse_message(inner);
        if (parsed.patchwise || parsed.spec.algorithm != Algorithm::None) {
            throw FormatError("full-message inner body must be uncompressed");
        }
        return materialize(parsed, WireMode::Full, view.spec);
    }
    throw FormatError("unknown message magic");
}

Decoded decode(const WireMessage& msg) { return decode(msg.bytes); }

SizeBreakdown message_size_breakdown(const Bytes& bytes) {
    SizeBreakdown breakdown;
    if (magic_is(bytes, kEnvelopeMagic)) {
        breakdown.fixed_header = 17;
        breakdown.payload = bytes.size() - 17;
        return breakdown;
    }
    const ParsedMessage parsed = parse_message(bytes);
    breakdown.fixed_header = 28 + parsed.info.frame_id.size();
    breakdown.patch_headers = 36ull * parsed.info.patches.size();
    for (const auto& [off, len] : parsed.payload_spans) breakdown.payload += len;
    return breakdown;
}

void write_container(const std::string& path, const std::vector<WireMessage>& messages) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const WireMessage& msg : messages) {
        Bytes prefix;
        put_u64(prefix, msg.bytes.size());
        out.write(reinterpret_cast<const char*>(prefix.data()),
                  static_cast<std::streamsize>(prefix.size()));
        out.write(reinterpret_cast<const char*>(msg.bytes.data()),
                  static_cast<std::streamsize>(msg.bytes.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<Bytes> read_container_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<Bytes> messages;
    for (;;) {
        std::uint8_t prefix[8];
        in.read(reinterpret_cast<char*>(prefix), 8);
        if (in.gcount() == 0 && in.eof()) break;
        if (in.gcount() != 8) throw IntegrityError("container truncated in length prefix");
        std::uint64_t len = 0;
        for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(prefix[i]) << (8 * i);
        Bytes body(static_cast<std::size_t>(len));
        in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(len));
        if (static_cast<std::uint64_t>(in.gcount()) != len) {
            throw IntegrityError("container truncated in message body");
        }
        messages.push_back(std::move(body));
    }
    return messages;
}

void write_corpus_file(const std::string& path, const std::vector<GridMap>& frames) {
    std::vector<WireMessage> messages;
    messages.reserve(frames.size());
    for (const GridMap& frame : frames) {
        messages.push_back(encode_patchwise(frame, CodecSpec::none(), false));
    }
    write_container(path, messages);
}

std::vector<GridMap> read_corpus_file(const std::string& path) {
    std::vector<GridMap> frames;
    for (const Bytes& raw : read_container_raw(path)) {
        Decoded decoded = decode(raw);
        if (decoded.quantized) throw DataError("corpus file contains quantized frames");
        frames.push_back(std::move(std::get<GridMap>(decoded.content)));
    }
    return frames;
}

}  // namespace apgm
