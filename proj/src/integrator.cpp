#include "pitchfork/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace pitchfork {

namespace {

bool finite(const Vec4& s) { return s.allFinite(); }

bool after_side(double g, double g_before, Direction d) {
  switch (d) {
    case Direction::Rising: return g >= 0.0;
    case Direction::Falling: return g <= 0.0;
    case Direction::Either: return g_before < 0.0 ? g >= 0.0 : g <= 0.0;
  }
  return false;
}

bool crosses(double g_before, double g_after, Direction d) {
  const bool rising = g_before < 0.0 && g_after >= 0.0;
  const bool falling = g_before > 0.0 && g_after <= 0.0;
  switch (d) {
    case Direction::Rising: return rising;
    case Direction::Falling: return falling;
    case Direction::Either: return rising || falling;
  }
  return false;
}

void require_positive(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

std::string to_string(Scheme s) {
  return s == Scheme::Leapfrog2 ? "leapfrog2" : "composed4";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "leapfrog2") return Scheme::Leapfrog2;
  if (name == "composed4") return Scheme::Composed4;
  throw std::invalid_argument("unknown integration scheme '" + name + "'");
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(event_tol > 0.0)) throw std::invalid_argument("event_tol must be positive");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
}

void Stepper::leapfrog(Vec4& s, Mat4* tangent, double h) const {
  const double half = 0.5 * h;
  const double inv_ms = 1.0 / p_.m_s(), inv_mb = 1.0 / p_.m_b();
  s[0] += half * inv_ms * s[2];
  s[1] += half * inv_mb * s[3];
  if (tangent) {
    tangent->row(0) += half * inv_ms * tangent->row(2);
    tangent->row(1) += half * inv_mb * tangent->row(3);
  }
  const Vec2 f = force(s[0], s[1], p_);
  s[2] += h * f[0];
  s[3] += h * f[1];
  if (tangent) {
    const Mat2 k = force_jacobian(s[0], p_);
    tangent->bottomRows<2>() += h * k * tangent->topRows<2>();
  }
  s[0] += half * inv_ms * s[2];
  s[1] += half * inv_mb * s[3];
  if (tangent) {
    tangent->row(0) += half * inv_ms * tangent->row(2);
    tangent->row(1) += half * inv_mb * tangent->row(3);
  }
}

void Stepper::advance(Vec4& s, double h) const {
  Mat4* none = nullptr;
  if (scheme_ == Scheme::Leapfrog2) {
    leapfrog(s, none, h);
    return;
  }
  static const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
  static const double w0 = 1.0 - 2.0 * w1;
  leapfrog(s, none, w1 * h);
  leapfrog(s, none, w0 * h);
  leapfrog(s, none, w1 * h);
}

void Stepper::advance(Vec4& s, Mat4& tangent, double h) const {
  if (scheme_ == Scheme::Leapfrog2) {
    leapfrog(s, &tangent, h);
    return;
  }
  static const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
  static const double w0 = 1.0 - 2.0 * w1;
  leapfrog(s, &tangent, w1 * h);
  leapfrog(s, &tangent, w0 * h);
  leapfrog(s, &tangent, w1 * h);
}

std::int64_t steps_for(double t, double dt) {
  const double ratio = t / dt;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(ratio * (1.0 - 1e-12))));
}

PhaseState step(const PhaseState& s, const SystemParams& p, const IntegratorConfig& cfg) {
  cfg.validate();
  Vec4 v = s.vec();
  Stepper(p, cfg.scheme).advance(v, cfg.dt);
  if (!finite(v)) throw NonFiniteState(s, 0.0);
  return PhaseState::from_vec(v);
}

namespace {

StmTrajectory run_uniform(const PhaseState& s0, double t_final, const SystemParams& p,
                          const IntegratorConfig& cfg, std::int64_t stride, bool with_stm) {
  cfg.validate();
  require_positive(t_final, "t_final");
  if (stride < 1) throw std::invalid_argument("stride must be at least 1");
  const std::int64_t n = steps_for(t_final, cfg.dt);
  if (n > cfg.max_steps) throw std::invalid_argument("t_final / dt exceeds max_steps");
  const double h = t_final / static_cast<double>(n);
  const Stepper stepper(p, cfg.scheme);

  StmTrajectory out;
  Trajectory& tr = out.trajectory;
  tr.energy0 = total_energy(s0, p);
  tr.times.push_back(0.0);
  tr.states.push_back(s0);

  Vec4 s = s0.vec();
  for (std::int64_t k = 1; k <= n; ++k) {
    const Vec4 before = s;
    if (with_stm) {
      stepper.advance(s, out.stm, h);
    } else {
      stepper.advance(s, h);
    }
    const double t = k == n ? t_final : static_cast<double>(k) * h;
    if (!finite(s) || (with_stm && !out.stm.allFinite())) {
      throw NonFiniteState(PhaseState::from_vec(before), static_cast<double>(k - 1) * h);
    }
    if (escaped(s)) {
      tr.times.push_back(t);
      tr.states.push_back(PhaseState::from_vec(s));
      tr.escaped = true;
      return out;
    }
    if (k % stride == 0 || k == n) {
      tr.times.push_back(t);
      tr.states.push_back(PhaseState::from_vec(s));
    }
  }
  return out;
}

}  // namespace

Trajectory integrate(const PhaseState& s, double t_final, const SystemParams& p, const IntegratorConfig& cfg,
                     std::int64_t stride) {
  return run_uniform(s, t_final, p, cfg, stride, false).trajectory;
}

StmTrajectory integrate_with_stm(const PhaseState& s, double t_final, const SystemParams& p,
                                 const IntegratorConfig& cfg, std::int64_t stride) {
  return run_uniform(s, t_final, p, cfg, stride, true);
}

EventResult integrate_until_event(const PhaseState& s, const EventSpec& ev, double t_max, const SystemParams& p,
                                  const IntegratorConfig& cfg) {
  return integrate_until_any(s, std::span<const EventSpec>(&ev, 1), t_max, p, cfg);
}

EventResult integrate_until_any(const PhaseState& s0, std::span<const EventSpec> events, double t_max,
                                const SystemParams& p, const IntegratorConfig& cfg) {
  cfg.validate();
  require_positive(t_max, "t_max");
  if (events.empty()) throw std::invalid_argument("at least one event surface is required");
  const std::int64_t n = steps_for(t_max, cfg.dt);
  if (n > cfg.max_steps) throw std::invalid_argument("t_max / dt exceeds max_steps");
  const Stepper stepper(p, cfg.scheme);

  std::vector<double> g_before(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) g_before[i] = events[i].g(s0);

  Vec4 s = s0.vec();
  double t = 0.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    const double t_next = k == n ? t_max : std::min(t_max, static_cast<double>(k) * cfg.dt);
    const double h = t_next - t;
    Vec4 next = s;
    stepper.advance(next, h);
    if (!finite(next)) throw NonFiniteState(PhaseState::from_vec(s), t);
    const PhaseState next_state = PhaseState::from_vec(next);

    std::optional<EventResult> best;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double g_after = events[i].g(next_state);
      if (crosses(g_before[i], g_after, events[i].direction)) {
        const double gb = g_before[i];
        double lo = 0.0, hi = h;
        while (hi - lo > cfg.event_tol) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          Vec4 trial = s;
          stepper.advance(trial, mid);
          if (after_side(events[i].g(PhaseState::from_vec(trial)), gb, events[i].direction)) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        if (!best || t + hi < best->time) {
          Vec4 at = s;
          stepper.advance(at, hi);
          best = EventResult{StopReason::Event, t + hi, PhaseState::from_vec(at), i};
        }
      }
      g_before[i] = g_after;
    }
    if (best) return *best;
    if (escaped(next)) return {StopReason::Escaped, t_next, next_state, 0};
    s = next;
    t = t_next;
  }
  return {StopReason::TimeLimit, t_max, PhaseState::from_vec(s), 0};
}

double max_energy_error(const Trajectory& tr, const SystemParams& p) {
  double worst = 0.0;
  for (const auto& st : tr.states) worst = std::max(worst, std::abs(total_energy(st, p) - tr.energy0));
  return worst;
}

}  // namespace pitchfork
