#pragma once

#include <cstdint>

namespace apgm {

// Deterministic 64-bit generators used for corpus synthesis and jitter
// sampling. SplitMix64 (Steele, Lea & Vigna; public-domain reference
// algorithm) is fixed here because its output is a pure function of the
// 64-bit state on every platform, which keeps generated corpora
// bit-identical across compilers and architectures. <random> distributions
// are implementation-defined and must not be used on any reproducible path.

/// SplitMix64 stream generator.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

/// Stateless mix of up to three words through the SplitMix64 finalizer.
/// Used as a position hash for lattice noise.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1) + 0x517cc1b727220a95ULL * (c + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform [0,1) value derived from a position hash.
inline double hash_unit(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    return static_cast<double>(mix64(a, b, c) >> 11) * 0x1.0p-53;
}

}  // namespace apgm
