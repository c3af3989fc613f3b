#pragma once

#include <cstdint>

namespace ticketlab {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

/// Every randomized quantity in a run derives from the single top-level seed
/// through this function; stream ids are listed in docs/formats.md.
inline uint64_t derive_seed(uint64_t top_seed, uint32_t stream, uint32_t index) {
    uint64_t x = top_seed;
    x ^= 0x9E3779B97F4A7C15ULL * (static_cast<uint64_t>(stream) + 1);
    x ^= 0xD1B54A32D192ED03ULL * (static_cast<uint64_t>(index) + 1);
    return splitmix64(x);
}

}  // namespace ticketlab
