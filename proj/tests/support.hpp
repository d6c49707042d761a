#pragma once

#include <cmath>
#include <random>

#include "pitchfork/model.hpp"

namespace testing {

inline double rand_in(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline pitchfork::PhaseState random_state(std::mt19937_64& rng, double r = 2.0) {
  return {rand_in(rng, -r, r), rand_in(rng, -r, r), rand_in(rng, -r, r), rand_in(rng, -r, r)};
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testing
