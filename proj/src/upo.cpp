#include "pitchfork/upo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "pitchfork/errors.hpp"

namespace pitchfork {

namespace {

struct SaddleSpot {
  double x;
  double energy;
  double stiffness;  // -d(force_x)/dx at the saddle, must be negative for a saddle
};

SaddleSpot uncoupled_saddle(SaddleSelector which, const SystemParams& p) {
  const double a = p.alpha(), b = p.beta();
  if (which == SaddleSelector::CaseII_IV_origin) {
    if (!(a > 0.0)) throw WrongRegime("origin is not a saddle unless alpha > 0");
    return {0.0, 0.0, -a};
  }
  if (!(a < 0.0 && b < 0.0)) throw WrongRegime("the saddle pair x = +-sqrt(alpha/beta) needs alpha < 0, beta < 0");
  const double xs = std::sqrt(a / b);
  return {which == SaddleSelector::CaseIII_minus ? -xs : xs, -a * a / (4.0 * b), 2.0 * a};
}

/// y on V(x, y) = e nearest to `near`, or nothing if the vertical line
/// through x misses the level set.
std::optional<double> solve_y_on_level(double x, double e, double near, const SystemParams& p) {
  const double a = 0.5 * (p.omega() + p.epsilon());
  const double b = -p.epsilon() * x;
  const double x2 = x * x;
  const double c = 0.5 * (p.epsilon() - p.alpha()) * x2 + 0.25 * p.beta() * x2 * x2 - e;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b == 0.0 ? 1.0 : b));
  double r1 = q / a;
  double r2 = q != 0.0 ? c / q : r1;
  double y = std::abs(r1 - near) <= std::abs(r2 - near) ? r1 : r2;
  // One Newton polish in y against the full potential.
  const double vy = -force(x, y, p)[1];
  if (vy != 0.0) y -= (potential_energy(x, y, p) - e) / vy;
  return y;
}

struct HalfPeriod {
  Vec4 state;
  Mat4 stm;
};

HalfPeriod propagate(const Vec4& s0, double tau, std::int64_t steps, const Stepper& stepper) {
  HalfPeriod out{s0, Mat4::Identity()};
  const double h = tau / static_cast<double>(steps);
  for (std::int64_t k = 0; k < steps; ++k) stepper.advance(out.state, out.stm, h);
  return out;
}

double residual_norm(const Vec4& s) { return std::max(std::abs(s[2]), std::abs(s[3])); }

double nearest_saddle_energy(const std::vector<PhaseState>& samples, double e, const SystemParams& p) {
  double mean_x = 0.0;
  for (const auto& s : samples) mean_x += s.x;
  mean_x /= static_cast<double>(samples.size());
  try {
    const auto saddles = saddle_points(p);
    if (saddles.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto best = std::min_element(saddles.begin(), saddles.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.state.x - mean_x) < std::abs(b.state.x - mean_x);
    });
    return e - best->energy;
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

std::int64_t substeps_per_sample(double period, std::size_t samples, double dt) {
  return steps_for(period / static_cast<double>(samples), dt);
}

Mat4 symplectic_form() {
  Mat4 omega = Mat4::Zero();
  omega.topRightCorner<2, 2>() = Mat2::Identity();
  omega.bottomLeftCorner<2, 2>() = -Mat2::Identity();
  return omega;
}

double symplecticity_error(const Mat4& m) {
  const Mat4 omega = symplectic_form();
  return (m.transpose() * omega * m - omega).cwiseAbs().maxCoeff();
}

Spectrum floquet_multipliers(const Mat4& monodromy) {
  Eigen::EigenSolver<Mat4> solver(monodromy, false);
  Spectrum all;
  for (int i = 0; i < 4; ++i) all[i] = solver.eigenvalues()[i];
  // Hyperbolic pair first (largest |log|lambda||), larger modulus leading.
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::abs(std::log(std::abs(a))) > std::abs(std::log(std::abs(b)));
  });
  if (std::abs(all[0]) < std::abs(all[1])) std::swap(all[0], all[1]);
  return all;
}

double multiplier_structure_error(const Spectrum& m) {
  const double lu = std::abs(m[0]);
  double err = std::abs(m[0] * m[1] - 1.0);
  err = std::max(err, std::abs(m[0].imag()) / lu);
  err = std::max(err, std::abs(m[1].imag()) * lu);
  err = std::max(err, std::abs(m[2] - 1.0));
  err = std::max(err, std::abs(m[3] - 1.0));
  return err;
}

PeriodicOrbit analytic_upo_uncoupled(double e, SaddleSelector which, const SystemParams& p, std::size_t samples) {
  if (p.epsilon() != 0.0) throw WrongRegime("closed-form orbit requires epsilon = 0");
  if (samples < 2) throw std::invalid_argument("orbit needs at least two samples");
  const SaddleSpot saddle = uncoupled_saddle(which, p);
  const double de = e - saddle.energy;
  if (!(de > 0.0)) throw WrongRegime("excess energy must be positive");

  const double freq = std::sqrt(p.omega() / p.m_b());
  const double amplitude = std::sqrt(2.0 * de / p.omega());
  PeriodicOrbit orbit;
  orbit.energy = e;
  orbit.excess_energy = de;
  orbit.period = 2.0 * std::numbers::pi / freq;
  orbit.samples.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
    orbit.samples.emplace_back(saddle.x, amplitude * std::cos(phase), 0.0,
                               -p.m_b() * amplitude * freq * std::sin(phase));
  }

  // x decouples: xddot = r^2 x about the pinned saddle; the bath block is the
  // identity after a full period.
  const double r = std::sqrt(-saddle.stiffness / p.m_s());
  const double rt = r * orbit.period;
  orbit.monodromy = Mat4::Identity();
  orbit.monodromy(0, 0) = std::cosh(rt);
  orbit.monodromy(0, 2) = std::sinh(rt) / (p.m_s() * r);
  orbit.monodromy(2, 0) = p.m_s() * r * std::sinh(rt);
  orbit.monodromy(2, 2) = std::cosh(rt);
  orbit.multipliers = {std::exp(rt), std::exp(-rt), 1.0, 1.0};
  return orbit;
}

PhaseState initial_guess(double e, const EquilibriumPoint& saddle, const SystemParams& p) {
  if (saddle.stability != Stability::SaddleCentre) {
    throw NotASaddle("initial guess needs a saddle-centre equilibrium, got " + to_string(saddle.stability));
  }
  const double de = e - saddle.energy;
  if (de < 0.0) throw std::invalid_argument("energy is below the saddle");

  const Eigen::DiagonalMatrix<double, 2> scale(1.0 / std::sqrt(p.m_s()), 1.0 / std::sqrt(p.m_b()));
  const Mat2 k = force_jacobian(saddle.state.x, p);
  Eigen::SelfAdjointEigenSolver<Mat2> solver(scale * k * scale);
  // Ascending order: the first eigenvalue is the (negative) centre one.
  Vec2 dir = scale * solver.eigenvectors().col(0);
  if (dir[1] < 0.0) dir = -dir;
  const double curvature = -dir.dot(k * dir);
  const double amp = std::sqrt(2.0 * de / curvature);
  return {saddle.state.x + amp * dir[0], saddle.state.y + amp * dir[1], 0.0, 0.0};
}

PeriodicOrbit differential_correction(const PhaseState& guess, double e, const SystemParams& p,
                                      const IntegratorConfig& cfg, const OrbitOptions& opts) {
  cfg.validate();
  if (opts.samples < 4 || opts.samples % 2 != 0) throw std::invalid_argument("orbit samples must be even and >= 4");
  const Stepper stepper(p, cfg.scheme);

  auto start_point = [&](double x0, double near) -> Vec4 {
    const auto y0 = solve_y_on_level(x0, e, near, p);
    if (!y0) throw LostEnergy("no point on V = e above x0 = " + std::to_string(x0));
    const double err = std::abs(potential_energy(x0, *y0, p) - e);
    if (err > opts.energy_tolerance) throw LostEnergy("start point misses the energy by " + std::to_string(err));
    return {x0, *y0, 0.0, 0.0};
  };

  Vec4 s0 = start_point(guess.x, guess.y);

  // Half period: first return of py to zero after leaving the turning point.
  const EventSpec turn{[](const PhaseState& s) { return s.py; }, Direction::Either};
  const EventResult first = integrate_until_event(PhaseState::from_vec(s0), turn, 100.0, p, cfg);
  if (!first.hit()) throw NoConvergence("no second turning point within t = 100");
  double tau = first.time;

  const std::int64_t substeps = substeps_per_sample(2.0 * tau, opts.samples, cfg.dt);
  const std::int64_t half_steps = substeps * static_cast<std::int64_t>(opts.samples / 2);

  HalfPeriod half = propagate(s0, tau, half_steps, stepper);
  double norm = residual_norm(half.state);
  int iterations = 0;
  int polish = 0;
  while (true) {
    if (!half.state.allFinite()) throw NoConvergence("orbit correction diverged");
    if (norm < opts.tolerance) {
      // Converged; keep taking Newton steps while they still pay off.
      if (polish >= 3) break;
      ++polish;
    } else if (iterations >= opts.max_iterations) {
      throw NoConvergence("half-period momenta " + std::to_string(norm) + " after " +
                          std::to_string(iterations) + " Newton steps");
    } else {
      ++iterations;
    }

    const Vec2 f0 = force(s0[0], s0[1], p);
    const double dy_dx = f0[1] != 0.0 ? -f0[0] / f0[1] : 0.0;
    const Vec4 d0(1.0, dy_dx, 0.0, 0.0);
    const Vec4 col_x = half.stm * d0;
    const Vec4 col_t = vector_field(PhaseState::from_vec(half.state), p);
    Mat2 jac;
    jac << col_x[2], col_t[2], col_x[3], col_t[3];
    const Vec2 delta = jac.fullPivLu().solve(-Vec2(half.state[2], half.state[3]));
    if (!delta.allFinite()) throw NoConvergence("singular correction matrix");

    bool accepted = false;
    double scale = 1.0;
    for (int halving = 0; halving < 12; ++halving, scale *= 0.5) {
      Vec4 trial_start;
      try {
        trial_start = start_point(s0[0] + scale * delta[0], s0[1]);
      } catch (const LostEnergy&) {
        if (halving == 11) throw;
        continue;
      }
      const double trial_tau = tau + scale * delta[1];
      if (!(trial_tau > 0.0)) continue;
      HalfPeriod trial = propagate(trial_start, trial_tau, half_steps, stepper);
      const double trial_norm = residual_norm(trial.state);
      if (trial.state.allFinite() && trial_norm < norm) {
        s0 = trial_start;
        tau = trial_tau;
        half = trial;
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (norm < opts.tolerance) break;  // already converged, polishing stalled
      throw NoConvergence("line search failed at residual " + std::to_string(norm));
    }
  }

  // Assemble the full orbit: first half by integration, second half by time reversal.
  const std::size_t n = opts.samples;
  PeriodicOrbit orbit;
  orbit.energy = e;
  orbit.period = 2.0 * tau;
  orbit.iterations = iterations;
  orbit.substeps = substeps;
  orbit.samples.resize(n);
  const double h = tau / static_cast<double>(half_steps);

  Vec4 s = s0;
  Mat4 stm = Mat4::Identity();
  Vec4 closing = s0;
  for (std::size_t k = 0; k <= n; ++k) {
    if (k <= n / 2) orbit.samples[k] = PhaseState::from_vec(s);
    if (k == n) {
      closing = s;
      break;
    }
    for (std::int64_t j = 0; j < substeps; ++j) stepper.advance(s, stm, h);
  }
  for (std::size_t k = n / 2 + 1; k < n; ++k) orbit.samples[k] = reverse_momenta(orbit.samples[n - k]);

  orbit.monodromy = stm;
  orbit.multipliers = floquet_multipliers(stm);
  orbit.closure_residual = (closing - s0).cwiseAbs().maxCoeff();
  orbit.excess_energy = nearest_saddle_energy(orbit.samples, e, p);

  for (const auto& sample : orbit.samples) {
    const double err = std::abs(total_energy(sample, p) - e);
    if (err > opts.energy_tolerance) {
      throw LostEnergy("orbit sample energy error " + std::to_string(err) +
                       " exceeds tolerance; use the fourth-order scheme or a smaller step");
    }
  }
  return orbit;
}

OrbitFamily continue_through(const PeriodicOrbit& orbit, std::span<const double> energies, const SystemParams& p,
                             const IntegratorConfig& cfg, const OrbitOptions& opts) {
  OrbitFamily family;
  const PeriodicOrbit* previous = &orbit;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    try {
      family.orbits.push_back(differential_correction(previous->samples.front(), energies[k], p, cfg, opts));
    } catch (const Error& err) {
      family.failed_at = k;
      family.failure = err.what();
      return family;
    }
    previous = &family.orbits.back();
  }
  return family;
}

OrbitFamily continue_in_energy(const PeriodicOrbit& orbit, double e_target, int n_steps, const SystemParams& p,
                               const IntegratorConfig& cfg, const OrbitOptions& opts) {
  if (n_steps < 1) throw std::invalid_argument("continuation needs at least one step");
  std::vector<double> ladder(static_cast<std::size_t>(n_steps));
  for (int k = 1; k <= n_steps; ++k) {
    ladder[static_cast<std::size_t>(k - 1)] =
        k == n_steps ? e_target : orbit.energy + (e_target - orbit.energy) * k / n_steps;
  }
  return continue_through(orbit, ladder, p, cfg, opts);
}

PeriodicOrbit mirror_orbit(const PeriodicOrbit& orbit) {
  PeriodicOrbit out = orbit;
  for (auto& s : out.samples) s = negate(s);
  // The monodromy is conjugated by -I, which leaves it unchanged.
  return out;
}

PeriodicOrbit orbit_at_excess_energy(const EquilibriumPoint& saddle, double delta_e, const SystemParams& p,
                                     const IntegratorConfig& cfg, const OrbitOptions& opts) {
  if (!(delta_e > 0.0)) throw std::invalid_argument("excess energy must be positive");
  const double e = saddle.energy + delta_e;
  try {
    return differential_correction(initial_guess(e, saddle, p), e, p, cfg, opts);
  } catch (const Error&) {
    // Fall back to continuation from a smaller orbit, where the linear guess is better.
  }
  const double e_small = saddle.energy + 0.1 * delta_e;
  const PeriodicOrbit small = differential_correction(initial_guess(e_small, saddle, p), e_small, p, cfg, opts);
  OrbitFamily family = continue_in_energy(small, e, 10, p, cfg, opts);
  if (!family.complete()) throw NoConvergence("continuation to dE = " + std::to_string(delta_e) + " failed: " +
                                              family.failure);
  return family.orbits.back();
}

double closure_residual(const PeriodicOrbit& orbit, const SystemParams& p, const IntegratorConfig& cfg) {
  const std::size_t n = orbit.samples.size();
  const std::int64_t substeps = orbit.substeps > 0 ? orbit.substeps : substeps_per_sample(orbit.period, n, cfg.dt);
  const std::int64_t steps = substeps * static_cast<std::int64_t>(n);
  const double h = orbit.period / static_cast<double>(steps);
  const Stepper stepper(p, cfg.scheme);
  const Vec4 s0 = orbit.samples.front().vec();
  Vec4 s = s0;
  for (std::int64_t k = 0; k < steps; ++k) stepper.advance(s, h);
  return (s - s0).cwiseAbs().maxCoeff();
}

}  // namespace pitchfork
