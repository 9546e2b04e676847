#pragma once

#include <cstdint>
#include <random>

namespace fmdp {

using Rng = std::mt19937_64;

/// Named streams so environment, agent and planner randomness stay independent.
enum class Stream : std::uint64_t {
    environment = 1,
    agent = 2,
    planner = 3,
    generator = 4,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t seed, Stream stream) {
    return Rng(mix64(mix64(seed) ^ static_cast<std::uint64_t>(stream)));
}

} // namespace fmdp
