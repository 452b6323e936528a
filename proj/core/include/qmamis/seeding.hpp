#pragma once

#include <cstdint>
#include <initializer_list>

namespace qmamis {

/// SplitMix64 output function: a bijective 64-bit avalanche mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Combines a seed with one counter value into a new, decorrelated seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) noexcept
{
    return mix64(seed ^ mix64(counter + 0x632be59bd9b4e019ULL));
}

/// Folds a sequence of counters into `seed`, e.g. (master, budget, rep).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

} // namespace qmamis
