#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mce {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a, so that purpose tags can be plain string literals.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of the substream identified by (seed, purpose, indices...).
/// Distinct purposes or indices give statistically independent streams, and
/// the derivation depends on nothing but its arguments.
template <class... Indices>
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::string_view purpose,
                                       Indices... indices) noexcept {
    std::uint64_t h = mix64(seed ^ mix64(hash_tag(purpose)));
    ((h = mix64(h ^ static_cast<std::uint64_t>(indices))), ...);
    return h;
}

using Engine = std::mt19937_64;

template <class... Indices>
Engine make_engine(std::uint64_t seed, std::string_view purpose, Indices... indices) {
    return Engine(substream_seed(seed, purpose, indices...));
}

}  // namespace mce
