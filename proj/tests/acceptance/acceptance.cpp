// Runs each primary acceptance criterion and prints one PASS/FAIL line per
// criterion, followed by indented diagnostics. Exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "pitchfork/dividing_surface.hpp"
#include "pitchfork/errors.hpp"
#include "pitchfork/integrator.hpp"
#include "pitchfork/model.hpp"
#include "pitchfork/poincare.hpp"
#include "pitchfork/transport.hpp"
#include "pitchfork/upo.hpp"

using namespace pitchfork;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("violated: " + what);
    }
  }
  template <typename... Args>
  void note(const char* fmt, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    notes.emplace_back(buf);
  }
};

double rand_in(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

IntegratorConfig composed() {
  IntegratorConfig cfg;
  cfg.scheme = Scheme::Composed4;
  cfg.dt = 1e-3;
  return cfg;
}

// Distance from each expected root to the nearest computed eigenvalue.
double spectrum_mismatch(const Spectrum& mu, double lambda) {
  const std::complex<double> r = lambda >= 0 ? std::complex<double>(std::sqrt(lambda), 0.0)
                                             : std::complex<double>(0.0, std::sqrt(-lambda));
  double worst = 0.0;
  for (auto target : {r, -r}) {
    double best = INFINITY;
    for (const auto& z : mu) best = std::min(best, std::abs(z - target));
    worst = std::max(worst, best);
  }
  return worst;
}

Verdict eigenvalue_oracle() {
  Verdict v;
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int draws = 0, well_draws = 0;
  while (draws < 200) {
    const SystemParams p(rand_in(rng, -2, 2), rand_in(rng, -2, 2), rand_in(rng, 0.1, 3), rand_in(rng, 0, 2));
    const BifurcationCase k = classify(p);
    if (k == BifurcationCase::DegenerateLine || k == BifurcationCase::DegenerateNonHyperbolic) continue;
    ++draws;
    const auto origin = eigenvalues_at_origin(p);
    const Spectrum mu0 = jacobian_spectrum(PhaseState{}, p);
    worst = std::max({worst, spectrum_mismatch(mu0, origin.first), spectrum_mismatch(mu0, origin.second)});
    if (k == BifurcationCase::II || k == BifurcationCase::III) {
      ++well_draws;
      const auto wells = eigenvalues_at_wells(p);
      for (const auto& eq : find_equilibria(p)) {
        if (eq.state.x == 0.0) continue;
        const Spectrum mu = jacobian_spectrum(eq.state, p);
        worst = std::max({worst, spectrum_mismatch(mu, wells.first), spectrum_mismatch(mu, wells.second)});
      }
    }
  }
  v.note("200 draws (%d with wells), worst root mismatch %.3e", well_draws, worst);
  v.require(worst < 1e-10, "closed-form roots within 1e-10 of the numeric spectrum");
  return v;
}

double bisect_sign_change(const std::function<double(double)>& f, double lo, double hi) {
  const bool lo_positive = f(lo) > 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((f(mid) > 0.0) == lo_positive ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Verdict critical_coupling() {
  Verdict v;
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double w = rand_in(rng, 0.1, 3), e = rand_in(rng, 0.01, 2);
    const SystemParams base(0.0, 1.0, w, e);
    const double formula = w * e / (w + e);
    const double a1 = bisect_sign_change(
        [&](double a) { return eigenvalues_at_origin(base.with_alpha(a)).first; }, -5.0, 5.0);
    const double a3 = bisect_sign_change(
        [&](double a) { return well_eigenvalue_formula(base.with_alpha(a)).first; }, -5.0, 5.0);
    worst = std::max({worst, std::abs(a1 - formula), std::abs(a3 - formula)});
  }
  v.note("10 (omega, epsilon) draws, worst |alpha* - omega eps/(omega + eps)| = %.3e", worst);
  v.require(worst < 1e-12, "sign changes within 1e-12 of the formula");
  return v;
}

Verdict equilibrium_energies() {
  Verdict v;
  std::mt19937_64 rng(99);
  double worst = 0.0;
  int draws = 0;
  while (draws < 100) {
    const SystemParams p(rand_in(rng, -2, 2), rand_in(rng, -2, 2), rand_in(rng, 0.1, 3), rand_in(rng, 0, 2));
    const BifurcationCase k = classify(p);
    if (k != BifurcationCase::II && k != BifurcationCase::III) continue;
    ++draws;
    const double d = p.alpha() - p.omega() * p.epsilon() / (p.omega() + p.epsilon());
    const double expected = -d * d / (4.0 * p.beta());
    const auto eqs = find_equilibria(p);
    for (std::size_t i = 1; i < eqs.size(); ++i) {
      worst = std::max(worst, std::abs(total_energy(eqs[i].state, p) - expected));
    }
  }
  v.note("100 case II/III draws, worst |H - formula| = %.3e", worst);
  v.require(worst < 1e-12, "well energies within 1e-12");
  return v;
}

Verdict flux_oracle() {
  Verdict v;
  double worst = 0.0;
  for (double w : {0.5, 1.0, 4.0}) {
    const SystemParams p(1, 1, w, 0.0);
    for (double de : {0.01, 0.05, 0.1}) {
      const PeriodicOrbit orbit = analytic_upo_uncoupled(de, SaddleSelector::CaseII_IV_origin, p);
      const double q = flux_quadrature(orbit, p, composed()).Q;
      const double exact = 2.0 * std::numbers::pi * de / std::sqrt(w);
      worst = std::max(worst, std::abs(q - exact) / exact);
    }
  }
  v.note("9 (dE, omega) pairs, worst relative error %.3e", worst);
  v.require(worst < 1e-6, "quadrature within 1e-6 relative of 2 pi dE / sqrt(omega)");
  return v;
}

Verdict upo_correctness() {
  Verdict v;
  for (double eps : {0.2, 0.5}) {
    const SystemParams p(1, 1, 1, eps);
    const EquilibriumPoint saddle = saddle_points(p).front();
    for (double de : {0.01, 0.1}) {
      try {
        const PeriodicOrbit orbit = orbit_at_excess_energy(saddle, de, p, composed());
        const double closure = closure_residual(orbit, p, composed());
        double energy = 0.0;
        for (const auto& s : orbit.samples) energy = std::max(energy, std::abs(total_energy(s, p) - orbit.energy));
        const double structure = multiplier_structure_error(orbit.multipliers);
        const double det = std::abs(orbit.monodromy.determinant() - 1.0);
        v.note("eps=%.1f dE=%.2f: T=%.6f lambda_u=%.4f closure=%.2e energy=%.2e multipliers=%.2e |det-1|=%.2e", eps,
               de, orbit.period, orbit.unstable_multiplier(), closure, energy, structure, det);
        v.require(closure < 1e-9, "closure residual < 1e-9");
        v.require(energy < 1e-10, "energy error < 1e-10");
        v.require(structure < 1e-6, "multiplier structure within 1e-6");
        v.require(orbit.unstable_multiplier() > 1.0 + 1e-6, "hyperbolic multiplier");
        v.require(det < 1e-8, "det M = 1 +- 1e-8");
      } catch (const Error& err) {
        v.require(false, std::string("orbit solve: ") + err.what());
      }
    }
  }
  return v;
}

Verdict uncoupled_multiplier() {
  Verdict v;
  const SystemParams p(1, 1, 1, 0.0);
  const double expected = std::exp(2.0 * std::numbers::pi);
  const PeriodicOrbit orbit = orbit_at_excess_energy(saddle_points(p).front(), 0.01, p, composed());
  const double computed = orbit.unstable_multiplier();
  const double closed = analytic_upo_uncoupled(0.01, SaddleSelector::CaseII_IV_origin, p).unstable_multiplier();
  v.note("integrated lambda_u = %.8f, closed form %.8f, e^(2 pi) = %.8f", computed, closed, expected);
  v.require(std::abs(computed - expected) / expected < 1e-5, "integrated monodromy within 1e-5 relative");
  v.require(std::abs(closed - expected) / expected < 1e-5, "closed-form monodromy within 1e-5 relative");
  return v;
}

Verdict flux_trends() {
  Verdict v;
  std::vector<double> ladder;
  for (int k = 1; k <= 10; ++k) ladder.push_back(0.01 * k);
  const std::vector<double> eps{0.0, 0.2, 0.5};
  const auto rows = flux_curve(ladder, eps, SaddleSelector::CaseII_IV_origin, SystemParams(1, 1, 1, 0.0), composed());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    for (std::size_t j = 0; j < ladder.size(); ++j) {
      const FluxRow& row = rows[i * ladder.size() + j];
      if (!row.result) {
        v.require(false, "flux gap at eps=" + std::to_string(eps[i]) + ": " + row.flag);
        continue;
      }
      const double x = row.delta_e, y = row.result->Q;
      sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y;
      ++n;
    }
    const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    const double r2 = cov * cov / (vx * vy);
    v.note("eps=%.1f: slope %.6f, R^2 = %.8f", eps[i], cov / vx, r2);
    v.require(r2 > 0.999, "R^2 > 0.999 at eps=" + std::to_string(eps[i]));
  }
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    const auto& a = rows[j].result;
    const auto& b = rows[ladder.size() + j].result;
    const auto& c = rows[2 * ladder.size() + j].result;
    if (!a || !b || !c) continue;
    if (!(a->Q > b->Q && b->Q > c->Q)) {
      v.require(false, "Q strictly decreasing in eps at dE=" + std::to_string(ladder[j]));
    }
  }
  return v;
}

Verdict mirror_flux() {
  Verdict v;
  const SystemParams p(-1, -1, 1, 0.4);
  const PeriodicOrbit minus = orbit_at_excess_energy(select_saddle(SaddleSelector::CaseIII_minus, p), 0.05, p, composed());
  const PeriodicOrbit plus = orbit_at_excess_energy(select_saddle(SaddleSelector::CaseIII_plus, p), 0.05, p, composed());
  const double qm = flux_quadrature(minus, p, composed()).Q;
  const double qp = flux_quadrature(plus, p, composed()).Q;
  const double qr = flux_quadrature(mirror_orbit(minus), p, composed()).Q;
  v.note("Q(minus) = %.13f, Q(plus) = %.13f, |diff| = %.2e, mirror |diff| = %.2e", qm, qp, std::abs(qm - qp),
         std::abs(qm - qr));
  v.require(std::abs(qm - qp) < 1e-10, "independently solved partners agree to 1e-10");
  v.require(std::abs(qm - qr) < 1e-10, "mirror image agrees to 1e-10");
  return v;
}

std::string serialize(const std::vector<GapTimeRecord>& recs) {
  std::string out;
  char buf[64];
  for (const auto& r : recs) {
    if (r.gap_time) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%s\n", r.ic_index, *r.gap_time, to_string(r.exit).c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%zu,,%s\n", r.ic_index, to_string(r.exit).c_str());
    }
    out += buf;
  }
  return out;
}

std::size_t runs_above(const GapTimeHistogram& h, double fraction) {
  std::size_t peak = 0, runs = 0;
  for (auto c : h.counts) peak = std::max(peak, c);
  bool inside = false;
  for (auto c : h.counts) {
    const bool above = static_cast<double>(c) > fraction * static_cast<double>(peak);
    runs += above && !inside;
    inside = above;
  }
  return runs;
}

// Onset: first nonzero bin. Refined mode: vertex of the parabola through the
// tallest first-pulse bin and its neighbours.
void describe(Verdict& v, const char* label, const GapTimeHistogram& h, const std::optional<double>& mode) {
  double onset = NAN;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] > 0) {
      onset = h.bin_centre(i);
      break;
    }
  }
  double refined = NAN;
  if (mode) {
    const auto i = static_cast<std::size_t>(std::floor((*mode - h.lo) / h.bin_width()));
    if (i > 0 && i + 1 < h.counts.size()) {
      const double a = h.counts[i - 1], b = h.counts[i], c = h.counts[i + 1];
      const double denom = a - 2 * b + c;
      refined = denom != 0.0 ? *mode + 0.5 * h.bin_width() * (a - c) / denom : *mode;
    }
  }
  v.note("%s: binned %zu, censored %zu, runs above 1%% of peak %zu, onset %.2f, first-pulse mode %.2f (refined %.3f)",
         label, h.total() - h.censored - h.out_of_range, h.censored, runs_above(h, 0.01), onset,
         mode ? *mode : NAN, refined);
}

Verdict gap_time_structure() {
  Verdict v;
  const std::size_t n = 2000;
  const std::uint64_t seed = 42;
  const GapTimeSetup setup = case_ii_gap_setup(100.0);
  const IntegratorConfig cfg = composed();
  const std::vector<double> energies{0.01, 0.05, 0.1};

  auto check_range = [&](const std::vector<GapTimeRecord>& recs) {
    for (const auto& r : recs) {
      if (r.gap_time && !(*r.gap_time > 0.0 && *r.gap_time <= 100.0)) return false;
    }
    return true;
  };

  const SystemParams p0(1, 1, 1, 0.0);
  std::string first_run;
  for (double de : energies) {
    const DsSample ds = analytic_ds_uncoupled(de, SaddleSelector::CaseII_IV_origin, n, seed, Hemisphere::Backward, p0);
    const auto recs = gap_times(ds, setup, p0, cfg);
    if (first_run.empty()) first_run = serialize(recs);
    const GapTimeHistogram h = gap_time_histogram(recs);
    char label[64];
    std::snprintf(label, sizeof label, "(a) eps=0 dE=%.2f", de);
    describe(v, label, h, first_pulse_mode(h));
    v.require(is_unimodal(h), std::string(label) + " unimodal");
    v.require(check_range(recs), std::string(label) + " gap times in (0, 100]");
  }

  const SystemParams p(1, 1, 1, 0.5);
  const EquilibriumPoint saddle = saddle_points(p).front();
  std::vector<double> modes;
  for (double de : energies) {
    auto orbit = std::make_shared<const PeriodicOrbit>(orbit_at_excess_energy(saddle, de, p, cfg));
    const DsSample ds = sample_ds(orbit, n, seed, Hemisphere::Backward, p);
    const auto recs = gap_times(ds, setup, p, cfg);
    const GapTimeHistogram h = gap_time_histogram(recs);
    const auto mode = first_pulse_mode(h);
    char label[64];
    std::snprintf(label, sizeof label, "(b) eps=0.5 dE=%.2f", de);
    describe(v, label, h, mode);
    v.require(mode.has_value(), std::string(label) + " has a first pulse");
    modes.push_back(mode.value_or(NAN));
    v.require(check_range(recs), std::string(label) + " gap times in (0, 100]");
  }
  v.require(modes[0] > modes[1] && modes[1] > modes[2], "(b) first-pulse mode strictly decreasing in dE");

  const DsSample again =
      analytic_ds_uncoupled(energies[0], SaddleSelector::CaseII_IV_origin, n, seed, Hemisphere::Backward, p0);
  const bool identical = serialize(gap_times(again, setup, p0, cfg, 2)) == first_run;
  v.note("(d) rerun at seed %llu with 2 workers: %s", static_cast<unsigned long long>(seed),
         identical ? "byte-identical" : "differs");
  v.require(identical, "(d) byte-identical rerun");
  return v;
}

Verdict energy_conservation() {
  Verdict v;
  const SystemParams p(1, 1, 1, 0.5);
  const auto ics = seed_ensemble(0.1, 20, SectionWindow{}, 3, p);
  double worst = 0.0;
  for (const auto& s : ics) {
    const Trajectory tr = integrate(s, 100.0, p, composed());
    v.require(!tr.escaped, "trajectory stays bounded");
    worst = std::max(worst, max_energy_error(tr, p));
  }
  v.note("20 trajectories at dE = 0.1 over t = 100, worst |H(t) - H(0)| = %.3e", worst);
  v.require(worst < 1e-9, "energy error < 1e-9");
  return v;
}

Verdict poincare_oracle() {
  Verdict v;
  const SystemParams p(1, 1, 1, 0.0);
  const auto ics = seed_ensemble(0.05, 20, SectionWindow{}, 17, p);
  const auto orbits = section_map(ics, SectionSpec{}, 50, 2000.0, p, composed());
  double worst = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ics.size(); ++i) {
    const double level = x_subsystem_energy(ics[i].x, ics[i].px, p);
    for (const auto& h : orbits[i].hits) worst = std::max(worst, std::abs(x_subsystem_energy(h[0], h[1], p) - level));
    hits += orbits[i].hits.size();
  }
  v.note("20 trajectories, %zu hits, worst level-set deviation %.3e", hits, worst);
  v.require(hits > 0, "section is crossed");
  v.require(worst < 1e-8, "hits on the level set to 1e-8");
  return v;
}

Verdict tube_time_reversal() {
  Verdict v;
  const SystemParams p(1, 1, 1, 0.5);
  const PeriodicOrbit orbit = orbit_at_excess_energy(saddle_points(p).front(), 0.01, p, composed());
  TubeOptions opts;
  const std::size_t n = orbit.samples.size();
  double worst = 0.0;
  std::size_t fibers = 0;
  for (auto [stable, unstable] : {std::pair{Branch::StablePlus, Branch::UnstablePlus},
                                  std::pair{Branch::StableMinus, Branch::UnstableMinus}}) {
    const ManifoldTube s = globalize_manifolds(orbit, stable, opts, p, composed());
    const ManifoldTube u = globalize_manifolds(orbit, unstable, opts, p, composed());
    for (std::size_t k = 0; k < n; ++k) {
      const Fiber& fs = s.fibers[k];
      const Fiber& fu = u.fibers[(n - k) % n];
      if (fs.states.size() != fu.states.size()) {
        v.require(false, "fiber lengths match");
        continue;
      }
      for (std::size_t j = 0; j < fs.states.size(); ++j) {
        worst = std::max(worst, (fs.states[j].vec() - reverse_momenta(fu.states[j]).vec()).cwiseAbs().maxCoeff());
        if (fs.times[j] != -fu.times[j]) v.require(false, "times mirror");
      }
      ++fibers;
    }
  }
  v.note("%zu fiber pairs over t = %.0f, worst deviation %.3e", fibers, opts.t_prop, worst);
  v.require(worst < 1e-8, "stable tube equals reversed unstable tube to 1e-8");
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {"eigenvalue oracle", eigenvalue_oracle},
      {"critical coupling", critical_coupling},
      {"equilibrium energies", equilibrium_energies},
      {"flux oracle", flux_oracle},
      {"periodic orbit correctness", upo_correctness},
      {"uncoupled multiplier", uncoupled_multiplier},
      {"flux trends", flux_trends},
      {"mirror flux equality", mirror_flux},
      {"gap-time structure", gap_time_structure},
      {"energy conservation", energy_conservation},
      {"section integrable limit", poincare_oracle},
      {"manifold tube time reversal", tube_time_reversal},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& err) {
      v.require(false, std::string("exception: ") + err.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %s  (%.1f s)\n", v.pass ? "PASS" : "FAIL", c.name, secs);
    for (const auto& line : v.notes) std::printf("      %s\n", line.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
