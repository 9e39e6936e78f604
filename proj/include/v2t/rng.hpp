#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace v2t {

// 64-bit FNV-1a over raw bytes. Stable across platforms, unlike std::hash;
// used for token hashing, image digests, and seed derivation.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Uniform double in [0, 1) from the top 53 bits of the generator output.
// std::uniform_real_distribution is implementation-defined, which would make
// seeded fixtures compiler-dependent; this mapping is not.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

} // namespace v2t
