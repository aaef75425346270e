#pragma once

#include <cstdint>
#include <random>

namespace jigsaw {

using Rng = std::mt19937_64;

// Uniform integer in [0, n). Plain modulo keeps streams identical across
// standard libraries; the bias is negligible for the small n used here.
inline int uniform_index(Rng& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace jigsaw
