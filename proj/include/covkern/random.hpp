#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace covkern {

using Rng = std::mt19937_64;

//! SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x) noexcept;

//! Independent reproducible generator for a (seed, key...) tuple. Keys are
//! hashed in order, so substream(s, {a, b}) differs from substream(s, {b, a}).
Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

} // namespace covkern
