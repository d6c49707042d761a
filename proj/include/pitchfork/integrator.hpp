#pragma once

// Fixed-step symplectic propagation of Hamilton's equations, crossing
// detection with bisection refinement, and the tangent (variational) flow.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pitchfork/errors.hpp"
#include "pitchfork/model.hpp"

namespace pitchfork {

enum class Scheme {
  Leapfrog2,  // drift-kick-drift (position Verlet)
  Composed4,  // symmetric triple-jump composition of Leapfrog2
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct IntegratorConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::Leapfrog2;
  double event_tol = 1e-12;
  std::int64_t max_steps = 1'000'000'000;

  /// Throws std::invalid_argument on dt <= 0, event_tol <= 0 or max_steps < 1.
  void validate() const;
};

/// Propagation stops (without error) once |x| or |y| exceeds this radius.
inline constexpr double kEscapeRadius = 1e3;

class NonFiniteState : public Error {
 public:
  NonFiniteState(const PhaseState& last, double time)
      : Error("NonFiniteState", "state left the representable range after t = " + std::to_string(time)),
        last_finite(last),
        last_time(time) {}

  PhaseState last_finite;
  double last_time;
};

/// One-step map of the chosen scheme, optionally carrying the exact tangent
/// map of the discrete step along with the state.
class Stepper {
 public:
  Stepper(const SystemParams& p, Scheme scheme) : p_(p), scheme_(scheme) {}

  void advance(Vec4& s, double h) const;
  void advance(Vec4& s, Mat4& tangent, double h) const;

  const SystemParams& params() const { return p_; }
  Scheme scheme() const { return scheme_; }

 private:
  void leapfrog(Vec4& s, Mat4* tangent, double h) const;

  SystemParams p_;
  Scheme scheme_;
};

inline bool escaped(const Vec4& s) {
  return std::abs(s[0]) > kEscapeRadius || std::abs(s[1]) > kEscapeRadius;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseState> states;
  double energy0 = 0.0;
  bool escaped = false;  // true if propagation stopped at the escape radius
};

/// Number of uniform steps (of size t / n <= dt) covering [0, t].
std::int64_t steps_for(double t, double dt);

PhaseState step(const PhaseState& s, const SystemParams& p, const IntegratorConfig& cfg);

/// Samples every `stride` steps plus the final state. The step size is
/// t_final / ceil(t_final / dt) so the last sample lands on t_final.
Trajectory integrate(const PhaseState& s, double t_final, const SystemParams& p,
                     const IntegratorConfig& cfg, std::int64_t stride = 1);

struct StmTrajectory {
  Trajectory trajectory;
  Mat4 stm = Mat4::Identity();
};

StmTrajectory integrate_with_stm(const PhaseState& s, double t_final, const SystemParams& p,
                                 const IntegratorConfig& cfg, std::int64_t stride = 1);

enum class Direction { Rising, Falling, Either };

struct EventSpec {
  std::function<double(const PhaseState&)> g;
  Direction direction = Direction::Either;
};

enum class StopReason { Event, TimeLimit, Escaped };

struct EventResult {
  StopReason reason = StopReason::TimeLimit;
  double time = 0.0;
  PhaseState state;
  std::size_t event_index = 0;  // which spec fired, for multi-event searches

  bool hit() const { return reason == StopReason::Event; }
};

/// First crossing of g = 0 in the requested direction strictly after t = 0.
/// The crossing is bracketed on the step grid and bisected in time down to
/// cfg.event_tol; the returned state is the bracket end past the surface.
EventResult integrate_until_event(const PhaseState& s, const EventSpec& ev, double t_max,
                                  const SystemParams& p, const IntegratorConfig& cfg);

/// Earliest crossing among several surfaces.
EventResult integrate_until_any(const PhaseState& s, std::span<const EventSpec> events, double t_max,
                                const SystemParams& p, const IntegratorConfig& cfg);

/// max |H(t) - H(0)| over a trajectory.
double max_energy_error(const Trajectory& tr, const SystemParams& p);

}  // namespace pitchfork
