#pragma once

// Seeded toy audio: sinusoid mixtures, sawtooth sweeps and resonant
// filtered noise.

#include <cstdint>
#include <vector>

#include "harpnet/tensor.hpp"

namespace harpnet {

enum class SyntheticKind : std::uint8_t { kSines, kSawSweep, kFilteredNoise };

std::vector<Real> synthetic_clip(SyntheticKind kind, std::size_t samples, std::uint32_t sample_rate, std::uint64_t seed);

// Clip i has kind i % 3 and seed derived from (seed, i).
std::vector<std::vector<Real>> synthetic_set(std::size_t clips, std::size_t samples, std::uint32_t sample_rate,
                                             std::uint64_t seed);

}  // namespace harpnet
