#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace expressive {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a master seed and a path of indices. The result
/// depends only on the values, never on call order, so work units seeded this
/// way are reproducible under any scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(master);
    for (auto v : path) h = mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
    return h;
}

}  // namespace expressive
