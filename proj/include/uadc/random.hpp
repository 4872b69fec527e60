#pragma once

#include <cstdint>
#include <random>

namespace uadc {

using Rng = std::mt19937_64;

// Independent streams keyed by (seed, trial, lane). The key is mixed with
// splitmix64 before seeding, so neighbouring trials do not share state.
Rng derive_stream(std::uint64_t seed, std::uint64_t trial, std::uint64_t lane);

// Stream lanes used by the simulator.
inline constexpr std::uint64_t kProcessLane = 0;
inline constexpr std::uint64_t kDitherLane = 1;

}  // namespace uadc
