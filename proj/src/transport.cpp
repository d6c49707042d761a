#include "pitchfork/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "pitchfork/errors.hpp"
#include "pitchfork/parallel.hpp"

namespace pitchfork {

// ---------------------------------------------------------------- gap times

std::string to_string(ExitKind k) {
  switch (k) {
    case ExitKind::SameDS: return "SameDS";
    case ExitKind::OtherDS: return "OtherDS";
    case ExitKind::Boundary: return "Boundary";
    case ExitKind::Censored: return "Censored";
  }
  return "?";
}

GapTimeSetup case_ii_gap_setup(double cutoff) {
  GapTimeSetup s;
  s.exit_boundary = -1.0;
  s.exit_direction = Direction::Falling;
  s.exit_kind = ExitKind::SameDS;
  s.cutoff = cutoff;
  return s;
}

GapTimeSetup case_iii_gap_setup(double cutoff) {
  GapTimeSetup s;
  s.exit_boundary = 1.5;
  s.exit_direction = Direction::Rising;
  s.exit_kind = ExitKind::OtherDS;
  s.return_boundary = -1.5;
  s.return_direction = Direction::Falling;
  s.cutoff = cutoff;
  return s;
}

namespace {

GapTimeRecord follow(std::size_t index, const PhaseState& start, const GapTimeSetup& setup, const SystemParams& p,
                     const IntegratorConfig& cfg) {
  GapTimeRecord rec;
  rec.ic_index = index;
  std::vector<EventSpec> events;
  const double xb = setup.exit_boundary;
  events.push_back({[xb](const PhaseState& s) { return s.x - xb; }, setup.exit_direction});
  if (setup.return_boundary) {
    const double xr = *setup.return_boundary;
    events.push_back({[xr](const PhaseState& s) { return s.x - xr; }, setup.return_direction});
  }

  PhaseState s = start;
  double t = 0.0;
  try {
    while (t < setup.cutoff) {
      // After a return only the exit surface is watched.
      std::span<const EventSpec> watch(events.data(), rec.return_time ? 1 : events.size());
      const EventResult r = integrate_until_any(s, watch, setup.cutoff - t, p, cfg);
      if (r.reason == StopReason::Escaped) {
        rec.escaped = true;
        if (!rec.return_time) rec.exit = ExitKind::Boundary;
        return rec;
      }
      if (r.reason == StopReason::TimeLimit) return rec;
      const double at = t + r.time;
      if (r.event_index == 0) {
        rec.gap_time = std::min(at, setup.cutoff);
        rec.exit = setup.exit_kind;
        return rec;
      }
      rec.return_time = at;
      rec.exit = ExitKind::SameDS;
      s = r.state;
      t = at;
    }
  } catch (const NonFiniteState&) {
    rec.escaped = true;
    if (!rec.return_time) rec.exit = ExitKind::Boundary;
  }
  return rec;
}

}  // namespace

std::vector<GapTimeRecord> gap_times(const DsSample& ds, const GapTimeSetup& setup, const SystemParams& p,
                                     const IntegratorConfig& cfg, unsigned workers) {
  if (ds.orientation != Hemisphere::Backward) {
    throw std::invalid_argument("gap times start on the backward hemisphere (px > 0)");
  }
  if (!(setup.cutoff > 0.0)) throw std::invalid_argument("cutoff must be positive");
  cfg.validate();
  std::vector<GapTimeRecord> out(ds.points.size());
  parallel_for(ds.points.size(), workers,
               [&](std::size_t i) { out[i] = follow(i, ds.points[i], setup, p, cfg); });
  return out;
}

std::size_t GapTimeHistogram::total() const {
  std::size_t n = censored + out_of_range;
  for (auto c : counts) n += c;
  return n;
}

GapTimeHistogram gap_time_histogram(std::span<const GapTimeRecord> records, std::size_t bins, double lo, double hi) {
  if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  if (!(hi > lo)) throw std::invalid_argument("histogram range must be nonempty");
  GapTimeHistogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (const auto& r : records) {
    if (!r.gap_time) {
      ++h.censored;
      if (r.exit == ExitKind::SameDS) {
        ++h.censored_same_ds;
      } else if (r.exit == ExitKind::Boundary) {
        ++h.censored_boundary;
      } else {
        ++h.censored_cutoff;
      }
      continue;
    }
    const double g = *r.gap_time;
    if (g <= lo || g > hi) {
      ++h.out_of_range;
      continue;
    }
    const auto i = static_cast<std::size_t>(std::ceil((g - lo) / width)) - 1;
    ++h.counts[std::min(i, bins - 1)];
  }
  return h;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> runs_above(const GapTimeHistogram& h, double fraction) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  const std::size_t peak = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
  if (peak == 0) return runs;
  const double threshold = fraction * static_cast<double>(peak);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (static_cast<double>(h.counts[i]) <= threshold) continue;
    if (!runs.empty() && runs.back().second == i) {
      runs.back().second = i + 1;
    } else {
      runs.emplace_back(i, i + 1);
    }
  }
  return runs;
}

}  // namespace

bool is_unimodal(const GapTimeHistogram& h, double fraction) { return runs_above(h, fraction).size() == 1; }

std::optional<double> first_pulse_mode(const GapTimeHistogram& h, double fraction) {
  const auto runs = runs_above(h, fraction);
  if (runs.empty()) return std::nullopt;
  const std::size_t start = runs.front().first;
  std::size_t best = start;
  for (std::size_t i = start + 1; i < runs.front().second; ++i) {
    if (2 * h.counts[i] < h.counts[best]) break;
    if (h.counts[i] > h.counts[best]) best = i;
  }
  return h.bin_centre(best);
}

// --------------------------------------------------------------------- flux

std::string to_string(FluxMethod m) {
  return m == FluxMethod::AnalyticUncoupled ? "AnalyticUncoupled" : "QuadratureOnUPO";
}

FluxResult flux_analytic_uncoupled(double delta_e, double omega) {
  if (!(delta_e >= 0.0)) throw std::invalid_argument("excess energy must be non-negative");
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  FluxResult r;
  r.Q = 2.0 * std::numbers::pi * delta_e / std::sqrt(omega);
  r.method = FluxMethod::AnalyticUncoupled;
  r.delta_e = delta_e;
  return r;
}

namespace {

double action_sum(const std::vector<PhaseState>& samples, double period, const SystemParams& p, std::size_t stride) {
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < samples.size(); k += stride, ++used) {
    sum += samples[k].px * samples[k].px / p.m_s() + samples[k].py * samples[k].py / p.m_b();
  }
  return sum * period / static_cast<double>(used);
}

std::vector<PhaseState> resample(const PeriodicOrbit& orbit, std::size_t n, const SystemParams& p,
                                 const IntegratorConfig& cfg) {
  const std::int64_t sub = substeps_per_sample(orbit.period, n, cfg.dt);
  const double h = orbit.period / static_cast<double>(sub * static_cast<std::int64_t>(n));
  const Stepper stepper(p, cfg.scheme);
  std::vector<PhaseState> out;
  out.reserve(n);
  Vec4 s = orbit.samples.front().vec();
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(PhaseState::from_vec(s));
    for (std::int64_t j = 0; j < sub; ++j) stepper.advance(s, h);
  }
  return out;
}

}  // namespace

double trapezoid_action(const PeriodicOrbit& orbit, const SystemParams& p, std::size_t stride) {
  if (orbit.samples.empty()) throw std::invalid_argument("orbit has no samples");
  if (stride < 1 || orbit.samples.size() % stride != 0) {
    throw std::invalid_argument("stride must divide the sample count");
  }
  return action_sum(orbit.samples, orbit.period, p, stride);
}

FluxResult flux_quadrature(const PeriodicOrbit& orbit, const SystemParams& p, const IntegratorConfig& cfg,
                           int max_doublings) {
  if (orbit.samples.size() < 2) throw std::invalid_argument("orbit needs at least two samples");
  FluxResult r;
  r.method = FluxMethod::QuadratureOnUPO;
  r.delta_e = orbit.excess_energy;

  std::vector<PhaseState> samples = orbit.samples;
  for (int level = 0;; ++level) {
    const double full = action_sum(samples, orbit.period, p, 1);
    const double half = samples.size() % 2 == 0 ? action_sum(samples, orbit.period, p, 2) : full;
    r.Q = full;
    r.samples = samples.size();
    r.relative_change = full != 0.0 ? std::abs(full - half) / std::abs(full) : std::abs(full - half);
    r.converged = r.relative_change < 1e-8;
    if (r.converged || level >= max_doublings) break;
    samples = resample(orbit, 2 * samples.size(), p, cfg);
  }
  return r;
}

EquilibriumPoint select_saddle(SaddleSelector which, const SystemParams& p) {
  const auto saddles = saddle_points(p);
  if (which == SaddleSelector::CaseII_IV_origin) {
    for (const auto& s : saddles) {
      if (s.state.x == 0.0 && s.state.y == 0.0) return s;
    }
    throw NoSuchEquilibrium("the origin is not a saddle-centre for case " + to_string(classify(p)));
  }
  if (saddles.size() != 2) {
    throw NoSuchEquilibrium("the saddle pair +-x2^e needs case III, got " + to_string(classify(p)));
  }
  return which == SaddleSelector::CaseIII_minus ? saddles.front() : saddles.back();
}

std::vector<FluxRow> flux_curve(std::span<const double> delta_e_ladder, std::span<const double> epsilons,
                                SaddleSelector saddle_choice, const SystemParams& p, const IntegratorConfig& cfg,
                                const OrbitOptions& opts, unsigned workers) {
  if (delta_e_ladder.empty() || epsilons.empty()) throw std::invalid_argument("flux ladders must be nonempty");
  const std::size_t m = delta_e_ladder.size();
  std::vector<FluxRow> rows(epsilons.size() * m);
  parallel_for(epsilons.size(), workers, [&](std::size_t j) {
    const SystemParams pe = p.with_epsilon(epsilons[j]);
    for (std::size_t i = 0; i < m; ++i) {
      rows[j * m + i].delta_e = delta_e_ladder[i];
      rows[j * m + i].epsilon = epsilons[j];
    }
    auto fail_from = [&](std::size_t i, const std::string& why) {
      for (; i < m; ++i) rows[j * m + i].flag = why;
    };
    try {
      const EquilibriumPoint saddle = select_saddle(saddle_choice, pe);
      const PeriodicOrbit first = orbit_at_excess_energy(saddle, delta_e_ladder[0], pe, cfg, opts);
      std::vector<double> energies;
      for (std::size_t i = 1; i < m; ++i) energies.push_back(saddle.energy + delta_e_ladder[i]);
      const OrbitFamily family = continue_through(first, energies, pe, cfg, opts);
      auto store = [&](std::size_t i, const PeriodicOrbit& orbit) {
        FluxResult r = flux_quadrature(orbit, pe, cfg);
        r.delta_e = delta_e_ladder[i];
        rows[j * m + i].result = r;
        rows[j * m + i].period = orbit.period;
      };
      store(0, first);
      for (std::size_t i = 0; i < family.orbits.size(); ++i) store(i + 1, family.orbits[i]);
      if (!family.complete()) fail_from(*family.failed_at + 1, family.failure);
    } catch (const Error& err) {
      fail_from(0, err.what());
    }
  });
  return rows;
}

// --------------------------------------------------------------- manifolds

std::string to_string(Branch b) {
  switch (b) {
    case Branch::StablePlus: return "StablePlus";
    case Branch::StableMinus: return "StableMinus";
    case Branch::UnstablePlus: return "UnstablePlus";
    case Branch::UnstableMinus: return "UnstableMinus";
  }
  return "?";
}

Branch branch_from_string(const std::string& name) {
  for (Branch b : {Branch::StablePlus, Branch::StableMinus, Branch::UnstablePlus, Branch::UnstableMinus}) {
    if (to_string(b) == name) return b;
  }
  throw std::invalid_argument("unknown branch '" + name + "'");
}

bool is_stable(Branch b) { return b == Branch::StablePlus || b == Branch::StableMinus; }

namespace {

Vec4 real_eigenvector(const Mat4& m, double target) {
  Eigen::EigenSolver<Mat4> solver(m, true);
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (std::abs(solver.eigenvalues()[i] - target) < std::abs(solver.eigenvalues()[best] - target)) best = i;
  }
  return solver.eigenvectors().col(best).real();
}

Vec4 oriented(Vec4 v) {
  v.normalize();
  if (v[0] < 0.0) v = -v;
  return v;
}

}  // namespace

OrbitFrames transport_eigenvectors(const PeriodicOrbit& orbit, const SystemParams& p, const IntegratorConfig& cfg) {
  const double lu = orbit.unstable_multiplier();
  if (!(lu > 1.0 + 1e-6)) throw WrongRegime("orbit is not hyperbolic (lambda_u = " + std::to_string(lu) + ")");
  const std::size_t n = orbit.samples.size();
  const std::int64_t sub = orbit.substeps > 0 ? orbit.substeps : substeps_per_sample(orbit.period, n, cfg.dt);
  const double h = orbit.period / static_cast<double>(sub * static_cast<std::int64_t>(n));
  const Stepper stepper(p, cfg.scheme);

  const Vec4 vu = real_eigenvector(orbit.monodromy, lu);
  const Vec4 vs = real_eigenvector(orbit.monodromy, 1.0 / lu);
  OrbitFrames frames;
  frames.unstable.reserve(n);
  frames.stable.reserve(n);
  Vec4 s = orbit.samples.front().vec();
  Mat4 phi = Mat4::Identity();
  for (std::size_t k = 0; k < n; ++k) {
    frames.unstable.push_back(oriented(phi * vu));
    frames.stable.push_back(oriented(phi * vs));
    for (std::int64_t j = 0; j < sub; ++j) stepper.advance(s, phi, h);
  }
  return frames;
}

ManifoldTube globalize_manifolds(const PeriodicOrbit& orbit, Branch branch, const TubeOptions& opts,
                                 const SystemParams& p, const IntegratorConfig& cfg, unsigned workers) {
  if (!(opts.delta > 0.0) || !(opts.t_prop > 0.0) || opts.fiber_stride < 1 || opts.record_stride < 1) {
    throw std::invalid_argument("tube options need delta, t_prop > 0 and strides >= 1");
  }
  const OrbitFrames frames = transport_eigenvectors(orbit, p, cfg);
  const bool stable = is_stable(branch);
  const double sign = branch == Branch::StablePlus || branch == Branch::UnstablePlus ? 1.0 : -1.0;

  ManifoldTube tube;
  tube.branch = branch;
  tube.delta = opts.delta;
  std::vector<std::size_t> seeds;
  for (std::size_t k = 0; k < orbit.samples.size(); k += opts.fiber_stride) seeds.push_back(k);
  tube.fibers.resize(seeds.size());

  parallel_for(seeds.size(), workers, [&](std::size_t f) {
    const std::size_t k = seeds[f];
    const Vec4& dir = stable ? frames.stable[k] : frames.unstable[k];
    Vec4 start = orbit.samples[k].vec() + sign * opts.delta * dir;
    Fiber& fiber = tube.fibers[f];
    fiber.orbit_index = k;
    // Backward flow is the forward flow conjugated by momentum reversal.
    PhaseState s0 = PhaseState::from_vec(start);
    if (stable) s0 = reverse_momenta(s0);
    try {
      const Trajectory tr = integrate(s0, opts.t_prop, p, cfg, opts.record_stride);
      fiber.truncated = tr.escaped;
      fiber.times = tr.times;
      fiber.states = tr.states;
    } catch (const NonFiniteState& err) {
      fiber.truncated = true;
      fiber.times = {0.0, err.last_time};
      fiber.states = {s0, err.last_finite};
    }
    if (stable) {
      for (auto& t : fiber.times) t = -t;
      for (auto& s : fiber.states) s = reverse_momenta(s);
    }
  });
  return tube;
}

}  // namespace pitchfork
