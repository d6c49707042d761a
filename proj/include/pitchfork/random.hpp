#pragma once

#include <cstdint>
#include <random>

namespace pitchfork {

/// Independent generator for draw `index` of the run keyed by `seed`, so a
/// draw never depends on how many draws came before it or on which worker
/// produced it.
inline std::mt19937_64 draw_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace pitchfork
