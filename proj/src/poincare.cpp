#include "pitchfork/poincare.hpp"

#include <cmath>
#include <stdexcept>

#include "pitchfork/errors.hpp"
#include "pitchfork/parallel.hpp"
#include "pitchfork/random.hpp"

namespace pitchfork {

namespace {

double min_square_over(Range r) {
  if (r.lo <= 0.0 && r.hi >= 0.0) return 0.0;
  return std::min(r.lo * r.lo, r.hi * r.hi);
}

}  // namespace

double x_subsystem_energy(double x, double px, const SystemParams& p) {
  const double x2 = x * x;
  return 0.5 * px * px / p.m_s() - 0.5 * p.alpha() * x2 + 0.25 * p.beta() * x2 * x2;
}

std::vector<PhaseState> seed_ensemble(double e, std::size_t n, const SectionWindow& window, std::uint64_t seed,
                                      const SystemParams& p) {
  if (n < 1) throw std::invalid_argument("ensemble size must be at least 1");
  if (!(window.x.hi > window.x.lo) || !(window.px.hi > window.px.lo)) {
    throw std::invalid_argument("section window must have positive extent");
  }

  // Scan x for any admissible point; px enters only through its smallest square.
  const double px_floor = 0.5 * min_square_over(window.px) / p.m_s();
  bool any = false;
  constexpr int kScan = 4097;
  for (int i = 0; i < kScan && !any; ++i) {
    const double x = window.x.lo + (window.x.hi - window.x.lo) * i / (kScan - 1);
    any = px_floor + potential_energy(x, 0.0, p) < e;
  }
  if (!any) throw EmptyAdmissibleRegion("no (x, px) in the window has energy below e");

  std::vector<PhaseState> out;
  out.reserve(n);
  const std::uint64_t max_draws = 10'000 * static_cast<std::uint64_t>(n) + 1'000'000;
  for (std::uint64_t k = 0; out.size() < n; ++k) {
    if (k >= max_draws) throw EmptyAdmissibleRegion("admissible part of the window is too thin to sample");
    auto rng = draw_stream(seed, k);
    const double x = uniform(rng, window.x.lo, window.x.hi);
    const double px = uniform(rng, window.px.lo, window.px.hi);
    const double rest = e - 0.5 * px * px / p.m_s() - potential_energy(x, 0.0, p);
    if (rest <= 0.0) continue;
    out.emplace_back(x, 0.0, px, std::sqrt(2.0 * p.m_b() * rest));
  }
  return out;
}

std::vector<SectionOrbit> section_map(std::span<const PhaseState> ics, const SectionSpec& spec, int n_hits,
                                      double t_max, const SystemParams& p, const IntegratorConfig& cfg,
                                      unsigned workers) {
  if (n_hits < 0) throw std::invalid_argument("n_hits must be non-negative");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  cfg.validate();

  std::vector<SectionOrbit> out(ics.size());
  parallel_for(ics.size(), workers, [&](std::size_t i) {
    SectionOrbit& orbit = out[i];
    PhaseState current = ics[i];
    double elapsed = 0.0;
    while (static_cast<int>(orbit.hits.size()) < n_hits && elapsed < t_max) {
      EventResult r;
      try {
        r = integrate_until_event(current, spec.surface, t_max - elapsed, p, cfg);
      } catch (const NonFiniteState&) {
        orbit.escaped = true;
        break;
      }
      if (r.reason == StopReason::Escaped) {
        orbit.escaped = true;
        break;
      }
      if (r.reason == StopReason::TimeLimit) break;
      elapsed += r.time;
      current = r.state;
      if (std::abs(spec.rate(r.state, p)) <= kTransversalityFloor) {
        ++orbit.tangential;
        continue;
      }
      orbit.hits.push_back(spec.record(r.state));
      orbit.states.push_back(r.state);
      orbit.times.push_back(elapsed);
    }
  });
  return out;
}

}  // namespace pitchfork
