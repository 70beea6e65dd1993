#pragma once

// Counter-based deterministic RNG: each draw is a pure function of
// (seed, stream, index), so realizations are reproducible regardless of
// thread count or evaluation order.

#include <bit>
#include <cstdint>

namespace mstab::rng {

// SplitMix64 finalizer (Stafford mix13). Bijective on 64-bit words.
inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Named sub-streams of one seed.
enum class Stream : uint64_t {
    Arrivals  = 0x41525256414C5331ull,
    Locations = 0x4C4F434154494F4Eull,
    Signs     = 0x5349474E53545231ull,
    User      = 0x5553455253545231ull,
};

struct Counter {
    uint64_t key;

    Counter(uint64_t seed, Stream s) : key(mix64(seed ^ static_cast<uint64_t>(s))) {}

    uint64_t word(uint64_t i) const { return mix64(key + i * 0x9E3779B97F4A7C15ull); }

    // Uniform on the open interval (0,1); never returns 0 or 1 exactly.
    double u01(uint64_t i) const { return u01_from_word(word(i)); }

    // 52 mantissa bits into [1,2), shifted to (0,1); branch-free and cheap.
    static double u01_from_word(uint64_t w) {
        const double m = std::bit_cast<double>(0x3FF0000000000000ull | (w >> 12));
        return m - (1.0 - 0x1.0p-53);
    }
};

} // namespace mstab::rng
