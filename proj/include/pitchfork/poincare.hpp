#pragma once

// Surface-of-section return maps for ensembles on a fixed energy surface.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pitchfork/integrator.hpp"
#include "pitchfork/model.hpp"

namespace pitchfork {

/// Rectangle in the (x, px) plane of the y = 0 section.
struct SectionWindow {
  Range x{-2.0, 2.0};
  Range px{-1.0, 1.0};
};

/// States on y = 0 with H = e and py > 0, (x, px) uniform over the part of
/// `window` where px^2/(2 m_s) + V(x, 0) < e. Draw k uses draw_stream(seed, k).
/// Throws EmptyAdmissibleRegion if no point of the window is admissible.
std::vector<PhaseState> seed_ensemble(double e, std::size_t n, const SectionWindow& window, std::uint64_t seed,
                                      const SystemParams& p);

struct SectionSpec {
  /// Default: y = 0 crossed with ydot > 0.
  EventSpec surface{[](const PhaseState& s) { return s.y; }, Direction::Rising};
  /// Time derivative of the surface function, used for the transversality check.
  std::function<double(const PhaseState&, const SystemParams&)> rate =
      [](const PhaseState& s, const SystemParams& p) { return s.py / p.m_b(); };
  /// Coordinates emitted per hit. Default (x, px).
  std::function<std::array<double, 2>(const PhaseState&)> record =
      [](const PhaseState& s) { return std::array<double, 2>{s.x, s.px}; };
};

/// Hits with |rate| at or below this are treated as tangential and dropped.
inline constexpr double kTransversalityFloor = 1e-10;

struct SectionOrbit {
  std::vector<std::array<double, 2>> hits;
  std::vector<PhaseState> states;  // full state at each recorded hit
  std::vector<double> times;
  bool escaped = false;
  std::size_t tangential = 0;
};

/// Up to n_hits successive section crossings per initial condition within
/// t_max. Output order follows `ics` whatever the worker count.
std::vector<SectionOrbit> section_map(std::span<const PhaseState> ics, const SectionSpec& spec, int n_hits,
                                      double t_max, const SystemParams& p, const IntegratorConfig& cfg,
                                      unsigned workers = 1);

/// Energy of the uncoupled x subsystem, px^2/(2 m_s) - alpha x^2/2 + beta x^4/4.
double x_subsystem_energy(double x, double px, const SystemParams& p);

}  // namespace pitchfork
