#pragma once

// Dividing surface anchored on a periodic orbit: the 2-sphere of states on
// the energy surface whose configuration lies on the orbit, split into the
// forward (px < 0) and backward (px > 0) hemispheres.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pitchfork/model.hpp"
#include "pitchfork/upo.hpp"

namespace pitchfork {

enum class Hemisphere { Forward, Backward, Both };

std::string to_string(Hemisphere h);
Hemisphere hemisphere_from_string(const std::string& name);

/// Points with |px| at or below this are dropped from every sample.
inline constexpr double kHemisphereFloor = 1e-14;

struct DsSample {
  std::vector<PhaseState> points;
  double energy = 0.0;
  Hemisphere orientation = Hemisphere::Both;
  /// Orbit the configurations were taken from. Null for the closed form.
  std::shared_ptr<const PeriodicOrbit> source_orbit;
  /// orbit_index[k]: which orbit sample points[k] sits on.
  std::vector<std::size_t> orbit_index;
};

/// Returns exactly n points. Draw k = 0, 1, ... uses draw_stream(seed, k): a
/// uniform orbit sample, px uniform on [-px_max, px_max] with
/// px_max = sqrt(2 m_s (e - V)), then py = +-sqrt(2 m_b (e - V) - (m_b/m_s) px^2)
/// with a fair-coin sign. Draws of the wrong hemisphere (or |px| <= 1e-14)
/// are discarded and drawing continues until n points are kept. Throws
/// EnergeticallyForbidden if an orbit sample has V > e, or if 100 n + 1000
/// draws do not yield n points (an orbit with no momentum room).
DsSample sample_ds(std::shared_ptr<const PeriodicOrbit> orbit, std::size_t n, std::uint64_t seed,
                   Hemisphere orientation, const SystemParams& p);

/// Closed-form surface at epsilon = 0: x pinned at the saddle and (y, py, px)
/// on p_x^2/m_s + p_y^2/m_b + omega y^2 = 2 dE, drawn with the sample_ds
/// scheme on the analytic orbit. dE = 0 returns n copies of the saddle.
/// Throws WrongRegime if epsilon != 0 or dE < 0.
DsSample analytic_ds_uncoupled(double e, SaddleSelector which, std::size_t n, std::uint64_t seed,
                               Hemisphere orientation, const SystemParams& p);

}  // namespace pitchfork
