#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ctaes {

// FNV-1a over bytes; also used for parameter-freeze hashing.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// All randomness flows from one root seed split into named streams, so a
// single stochastic source can be varied or pinned in isolation.
// Stream names in use: "prompt-init", "head-init", "backend", "data-shuffle"
// (mixed with the epoch number), "val-split", "synth".
inline std::mt19937_64 seed_stream(std::uint64_t root_seed, std::string_view name, std::uint64_t salt = 0) {
    std::uint64_t h = fnv1a(name);
    h = splitmix64(h ^ splitmix64(root_seed));
    h = splitmix64(h ^ salt);
    return std::mt19937_64(h);
}

} // namespace ctaes
