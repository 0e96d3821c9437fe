#include "apgm/codec.hpp"

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstring>

#include <lz4frame.h>
#include <png.h>
#include <zlib.h>
#include <zstd.h>

#include "apgm/error.hpp"

namespace apgm {
namespace {

constexpr std::int32_t kLz4MinAccel = 1;
constexpr std::int32_t kLz4MaxAccel = 65535;
constexpr std::int32_t kZstdMinLevel = -100;
constexpr std::int32_t kZstdMaxLevel = 10;

// ---------------------------------------------------------------------- LZ4

// lz4frame maps preference level L < 0 to acceleration (-L + 1), so
// acceleration a corresponds to level (1 - a); a == 1 is the default fast path.
int lz4_level_for_acceleration(std::int32_t acceleration) {
    return acceleration <= 1 ? 0 : static_cast<int>(1 - acceleration);
}

Bytes lz4_compress(const Bytes& input, std::int32_t acceleration) {
    LZ4F_preferences_t prefs{};
    prefs.frameInfo.contentChecksumFlag = LZ4F_contentChecksumEnabled;
    prefs.frameInfo.contentSize = input.size();
    prefs.compressionLevel = lz4_level_for_acceleration(acceleration);

    const std::size_t bound = LZ4F_compressFrameBound(input.size(), &prefs);
    Bytes out(bound);
    const std::size_t written =
        LZ4F_compressFrame(out.data(), bound, input.data(), input.size(), &prefs);
    if (LZ4F_isError(written)) {
        throw IntegrityError(std::string("lz4 frame compression failed: ") +
                             LZ4F_getErrorName(written));
    }
    out.resize(written);
    return out;
}

struct Lz4DctxGuard {
    LZ4F_dctx* ctx = nullptr;
    ~Lz4DctxGuard() {
        if (ctx != nullptr) LZ4F_freeDecompressionContext(ctx);
    }
};

// expected_len == SIZE_MAX: take the content size from the frame header
// (always present in frames we produce).
Bytes lz4_decompress(const Bytes& input, std::size_t expected_len) {
    Lz4DctxGuard guard;
    if (LZ4F_isError(LZ4F_createDecompressionContext(&guard.ctx, LZ4F_VERSION))) {
        throw IntegrityError("lz4 decompression context allocation failed");
    }

    std::size_t src_pos = 0;
    if (expected_len == SIZE_MAX) {
        LZ4F_frameInfo_t info{};
        std::size_t consumed = input.size();
        const std::size_t rc = LZ4F_getFrameInfo(guard.ctx, &info, input.data(), &consumed);
        if (LZ4F_isError(rc)) {
            throw IntegrityError(std::string("lz4 frame header invalid: ") +
                                 LZ4F_getErrorName(rc));
        }
        // We always write contentSize, so 0 means a genuinely empty payload.
        expected_len = static_cast<std::size_t>(info.contentSize);
        src_pos = consumed;
    }

    Bytes out(expected_len);
    std::size_t dst_pos = 0;
    std::size_t hint = 1;
    while (src_pos < input.size()) {
        std::size_t dst_avail = out.size() - dst_pos;
        std::size_t src_avail = input.size() - src_pos;
        hint = LZ4F_decompress(guard.ctx, out.data() + dst_pos, &dst_avail,
                               input.data() + src_pos, &src_avail, nullptr);
        if (LZ4F_isError(hint)) {
            throw IntegrityError(std::string("lz4 stream corrupted: ") + LZ4F_getErrorName(hint));
        }
        dst_pos += dst_avail;
        src_pos += src_avail;
        if (hint == 0) break;
        if (dst_pos == out.size() && src_pos < input.size()) {
            throw IntegrityError("lz4 stream longer than declared length");
        }
    }
    if (hint != 0) throw IntegrityError("lz4 frame truncated");
    if (src_pos != input.size()) throw IntegrityError("trailing bytes after lz4 frame");
    if (dst_pos != out.size()) throw IntegrityError("lz4 frame shorter than declared length");
    return out;
}

// --------------------------------------------------------------------- Zstd

struct ZstdCctxGuard {
    ZSTD_CCtx* ctx = nullptr;
    ~ZstdCctxGuard() {
        if (ctx != nullptr) ZSTD_freeCCtx(ctx);
    }
};

Bytes zstd_compress(const Bytes& input, std::int32_t level) {
    ZstdCctxGuard guard;
    guard.ctx = ZSTD_createCCtx();
    if (guard.ctx == nullptr) throw IntegrityError("zstd context allocation failed");
    ZSTD_CCtx_setParameter(guard.ctx, ZSTD_c_compressionLevel, level);
    ZSTD_CCtx_setParameter(guard.ctx, ZSTD_c_checksumFlag, 1);

    Bytes out(ZSTD_compressBound(input.size()));
    const std::size_t written = ZSTD_compress2(guard.ctx, out.data(), out.size(), input.data(),
                                               input.size());
    if (ZSTD_isError(written)) {
        throw IntegrityError(std::string("zstd compression failed: ") +
                             ZSTD_getErrorName(written));
    }
    out.resize(written);
    return out;
}

Bytes zstd_decompress(const Bytes& input, std::size_t expected_len) {
    Bytes out(expected_len);
    const std::size_t written =
        ZSTD_decompress(out.data(), out.size(), input.data(), input.size());
    if (ZSTD_isError(written)) {
        throw IntegrityError(std::string("zstd stream corrupted: ") + ZSTD_getErrorName(written));
    }
    if (written != expected_len) throw IntegrityError("zstd frame shorter than declared length");
    return out;
}

// ---------------------------------------------------------------------- PNG

struct PngBuffer {
    const Bytes* input = nullptr;
    std::size_t pos = 0;
    Bytes* output = nullptr;
    bool failed = false;
};

extern "C" void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<PngBuffer*>(png_get_io_ptr(png));
    buf->output->insert(buf->output->end(), data, data + len);
}

extern "C" void png_flush_cb(png_structp) {}

extern "C" void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* buf = static_cast<PngBuffer*>(png_get_io_ptr(png));
    if (buf->pos + len > buf->input->size()) {
        png_error(png, "read past end of stream");
        return;
    }
    std::memcpy(data, buf->input->data() + buf->pos, len);
    buf->pos += len;
}

extern "C" void png_error_cb(png_structp png, png_const_charp) {
    longjmp(png_jmpbuf(png), 1);
}

extern "C" void png_warning_cb(png_structp, png_const_charp) {}

// Payload packed as an 8-bit grayscale image, one image row per stride.
// zlib settings are pinned so re-encoding is reproducible.
Bytes png_compress(const Bytes& input, const PngLayout& layout) {
    if (layout.row_stride_bytes == 0) {
        throw ConfigError("png codec requires a row stride (patch-wise use only)");
    }
    if (input.empty() || input.size() % layout.row_stride_bytes != 0) {
        throw ConfigError("png payload length must be a positive multiple of the row stride");
    }
    const std::uint32_t width = layout.row_stride_bytes;
    const auto height = static_cast<std::uint32_t>(input.size() / layout.row_stride_bytes);

    Bytes out;
    PngBuffer buf;
    buf.output = &out;

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warning_cb);
    if (png == nullptr) throw IntegrityError("png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw IntegrityError("png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IntegrityError("png encoding failed");
    }

    png_set_write_fn(png, &buf, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_compression_strategy(png, Z_FILTERED);
    png_set_compression_mem_level(png, 8);
    png_set_compression_window_bits(png, 15);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_ALL_FILTERS);

    png_write_info(png, info);
    for (std::uint32_t row = 0; row < height; ++row) {
        png_write_row(png, const_cast<png_bytep>(input.data() +
                                                 static_cast<std::size_t>(row) * width));
    }
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
    return out;
}

Bytes png_decompress(const Bytes& input, std::size_t expected_len) {
    PngBuffer buf;
    buf.input = &input;

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warning_cb);
    if (png == nullptr) throw IntegrityError("png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IntegrityError("png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IntegrityError("png stream corrupted");
    }

    png_set_read_fn(png, &buf, png_read_cb);
    png_read_info(png, info);
    const std::uint32_t width = png_get_image_width(png, info);
    const std::uint32_t height = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth != 8 || color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IntegrityError("png payload is not 8-bit grayscale");
    }
    if (static_cast<std::uint64_t>(width) * height != expected_len) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IntegrityError("png dimensions disagree with declared length");
    }

    Bytes out(expected_len);
    for (std::uint32_t row = 0; row < height; ++row) {
        png_read_row(png, out.data() + static_cast<std::size_t>(row) * width, nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::None: return "none";
        case Algorithm::RLE: return "rle";
        case Algorithm::LZ4: return "lz4";
        case Algorithm::RLZ4: return "rlz4";
        case Algorithm::Zstd: return "zstd";
        case Algorithm::PNG: return "png";
    }
    return "unknown";
}

Algorithm algorithm_from_name(const std::string& name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "none") return Algorithm::None;
    if (lower == "rle") return Algorithm::RLE;
    if (lower == "lz4") return Algorithm::LZ4;
    if (lower == "rlz4") return Algorithm::RLZ4;
    if (lower == "zstd") return Algorithm::Zstd;
    if (lower == "png") return Algorithm::PNG;
    throw ConfigError("unknown algorithm: " + name);
}

void validate_spec(const CodecSpec& spec) {
    switch (spec.algorithm) {
        case Algorithm::None:
        case Algorithm::RLE:
        case Algorithm::PNG:
            if (spec.param != 0) {
                throw ConfigError(std::string(algorithm_name(spec.algorithm)) +
                                  " takes no parameter (param must be 0)");
            }
            return;
        case Algorithm::LZ4:
        case Algorithm::RLZ4:
            if (spec.param < kLz4MinAccel || spec.param > kLz4MaxAccel) {
                throw ConfigError("lz4 acceleration out of range [1, 65535]");
            }
            return;
        case Algorithm::Zstd:
            if (spec.param < kZstdMinLevel || spec.param > kZstdMaxLevel) {
                throw ConfigError("zstd level out of range [-100, 10]");
            }
            return;
    }
    throw ConfigError("unknown algorithm id");
}

std::string spec_label(const CodecSpec& spec) {
    switch (spec.algorithm) {
        case Algorithm::LZ4:
        case Algorithm::RLZ4:
        case Algorithm::Zstd:
            return std::string(algorithm_name(spec.algorithm)) + ":" +
                   std::to_string(spec.param);
        default:
            return algorithm_name(spec.algorithm);
    }
}

Bytes rle_encode(const Bytes& input) {
    Bytes out;
    out.reserve(input.size() / 4 + 16);
    std::size_t i = 0;
    while (i < input.size()) {
        const std::uint8_t value = input[i];
        std::size_t run = 1;
        while (run < 255 && i + run < input.size() && input[i + run] == value) ++run;
        out.push_back(static_cast<std::uint8_t>(run));
        out.push_back(value);
        i += run;
    }
    return out;
}

Bytes rle_decode(const Bytes& input) {
    if (input.size() % 2 != 0) throw IntegrityError("rle stream has odd length");
    Bytes out;
    std::size_t total = 0;
    for (std::size_t i = 0; i < input.size(); i += 2) total += input[i];
    out.reserve(total);
    for (std::size_t i = 0; i < input.size(); i += 2) {
        const std::uint8_t count = input[i];
        if (count == 0) throw IntegrityError("rle run with zero repetition count");
        out.insert(out.end(), count, input[i + 1]);
    }
    return out;
}

CompressedBlock compress(const CodecSpec& spec, const Bytes& input, PngLayout layout) {
    validate_spec(spec);
    CompressedBlock block;
    block.spec = spec;
    block.uncompressed_len = input.size();
    switch (spec.algorithm) {
        case Algorithm::None:
            block.data = input;
            break;
        case Algorithm::RLE:
            block.data = rle_encode(input);
            break;
        case Algorithm::LZ4:
            block.data = lz4_compress(input, spec.param);
            break;
        case Algorithm::RLZ4:
            block.data = lz4_compress(rle_encode(input), spec.param);
            break;
        case Algorithm::Zstd:
            block.data = zstd_compress(input, spec.param);
            break;
        case Algorithm::PNG:
            block.data = png_compress(input, layout);
            break;
    }
    return block;
}

Bytes decompress(const CompressedBlock& block) {
    validate_spec(block.spec);
    const auto expected = static_cast<std::size_t>(block.uncompressed_len);
    Bytes out;
    switch (block.spec.algorithm) {
        case Algorithm::None:
            out = block.data;
            break;
        case Algorithm::RLE:
            out = rle_decode(block.data);
            break;
        case Algorithm::LZ4:
            out = lz4_decompress(block.data, expected);
            break;
        case Algorithm::RLZ4:
            out = rle_decode(lz4_decompress(block.data, SIZE_MAX));
            break;
        case Algorithm::Zstd:
            out = zstd_decompress(block.data, expected);
            break;
        case Algorithm::PNG:
            out = png_decompress(block.data, expected);
            break;
    }
    if (out.size() != expected) {
        throw IntegrityError("decompressed length disagrees with declared length");
    }
    return out;
}

}  // namespace apgm
