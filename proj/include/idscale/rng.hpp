#pragma once

#include <cstdint>
#include <random>

namespace idscale {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed of an independent substream. Replicas, iterations and generator
// components each take their own stream id so results never depend on the
// order in which streams are consumed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace idscale
