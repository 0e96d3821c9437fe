#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace apgm {

using Bytes = std::vector<std::uint8_t>;

enum class Algorithm : std::uint8_t {
    None = 0,
    RLE = 1,
    LZ4 = 2,
    RLZ4 = 3,
    Zstd = 4,
    PNG = 5,
};

const char* algorithm_name(Algorithm a);

/// Parses "none", "rle", "lz4", "rlz4", "zstd", "png" (case-insensitive).
Algorithm algorithm_from_name(const std::string& name);

/// Codec identifier plus tuning parameter.
///   LZ4 / RLZ4 : param = acceleration, [1, 65535]
///   Zstd       : param = level, [-100, 10]
///   None / RLE / PNG : param must be 0
struct CodecSpec {
    Algorithm algorithm = Algorithm::None;
    std::int32_t param = 0;

    bool operator==(const CodecSpec&) const = default;

    static CodecSpec none() { return {Algorithm::None, 0}; }
    static CodecSpec rle() { return {Algorithm::RLE, 0}; }
    static CodecSpec lz4(std::int32_t acceleration = 1) { return {Algorithm::LZ4, acceleration}; }
    static CodecSpec rlz4(std::int32_t acceleration = 1) { return {Algorithm::RLZ4, acceleration}; }
    static CodecSpec zstd(std::int32_t level = 3) { return {Algorithm::Zstd, level}; }
    static CodecSpec png() { return {Algorithm::PNG, 0}; }
};

/// Throws ConfigError when param is outside the algorithm's legal range.
void validate_spec(const CodecSpec& spec);

/// "name" or "name:param" for parameterized algorithms.
std::string spec_label(const CodecSpec& spec);

struct CompressedBlock {
    CodecSpec spec;
    std::uint64_t uncompressed_len = 0;
    Bytes data;
};

/// Image geometry for PNG: the payload is packed as 8-bit grayscale with
/// width = row_stride_bytes and height = payload_len / row_stride_bytes.
/// PNG is only defined patch-wise, where the originating patch fixes the
/// stride (cells_per_side * bytes-per-cell).
struct PngLayout {
    std::uint32_t row_stride_bytes = 0;
};

/// Run-length encodes into (count, value) byte pairs, count in [1,255];
/// runs longer than 255 are split. Worst case exactly doubles the input.
Bytes rle_encode(const Bytes& input);

/// Exact inverse of rle_encode. Throws IntegrityError on odd-length input
/// or a zero repetition count.
Bytes rle_decode(const Bytes& input);

/// Compresses input under spec. PNG requires a non-zero layout stride that
/// divides the input length; all other algorithms ignore `layout`.
CompressedBlock compress(const CodecSpec& spec, const Bytes& input, PngLayout layout = {});

/// Exact inverse of compress. Throws IntegrityError when the stream is
/// corrupted, truncated, or decodes to a length other than uncompressed_len.
Bytes decompress(const CompressedBlock& block);

}  // namespace apgm
