#pragma once

// Transport through the dividing surface: gap-time ensembles, directional
// flux through the periodic orbit, and the globalized stable and unstable
// manifold tubes.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchfork/dividing_surface.hpp"
#include "pitchfork/integrator.hpp"
#include "pitchfork/model.hpp"
#include "pitchfork/upo.hpp"

namespace pitchfork {

// ---------------------------------------------------------------- gap times

enum class ExitKind { SameDS, OtherDS, Boundary, Censored };

std::string to_string(ExitKind k);

struct GapTimeRecord {
  std::size_t ic_index = 0;
  /// Set only when the exit surface was crossed within the cutoff.
  std::optional<double> gap_time;
  ExitKind exit = ExitKind::Censored;
  /// Stopped at the escape radius or on a non-finite state.
  bool escaped = false;
  /// Case III: first crossing back out through the starting surface.
  std::optional<double> return_time;
};

struct GapTimeSetup {
  /// Crossing that ends the gap time.
  double exit_boundary = -1.0;
  Direction exit_direction = Direction::Falling;
  ExitKind exit_kind = ExitKind::SameDS;
  /// Optional surface that marks a return through the starting DS. It is
  /// recorded and integration continues.
  std::optional<double> return_boundary;
  Direction return_direction = Direction::Falling;
  double cutoff = 100.0;
};

/// Case II: a trajectory that entered the right well leaves through x = -1.
GapTimeSetup case_ii_gap_setup(double cutoff = 100.0);
/// Case III, starting on the minus surface: leaving through x = +1.5 counts
/// as crossing the other surface, x = -1.5 (falling) as a return.
GapTimeSetup case_iii_gap_setup(double cutoff = 100.0);

/// One record per point of `ds`, in order, whatever the worker count.
/// Requires a Backward sample.
std::vector<GapTimeRecord> gap_times(const DsSample& ds, const GapTimeSetup& setup, const SystemParams& p,
                                     const IntegratorConfig& cfg, unsigned workers = 1);

struct GapTimeHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
  /// Records without a gap time, i.e. everything not binned.
  std::size_t censored = 0;
  std::size_t censored_same_ds = 0;
  std::size_t censored_boundary = 0;
  std::size_t censored_cutoff = 0;
  /// Gap times outside [lo, hi] (only possible with a custom range).
  std::size_t out_of_range = 0;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_centre(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
  std::size_t total() const;
};

/// Uniform bins on (lo, hi]; a value equal to hi falls in the last bin.
GapTimeHistogram gap_time_histogram(std::span<const GapTimeRecord> records, std::size_t bins = 200,
                                    double lo = 0.0, double hi = 100.0);

/// Bins whose count exceeds `fraction` of the peak form exactly one run.
bool is_unimodal(const GapTimeHistogram& h, double fraction = 0.01);

/// Mode of the earliest pulse. The pulse starts at the first bin above
/// `fraction` of the global peak and ends at the first bin that drops below
/// half of the pulse maximum so far (or leaves that run). Returns the centre
/// of the tallest bin in it; empty histograms have no mode.
std::optional<double> first_pulse_mode(const GapTimeHistogram& h, double fraction = 0.01);

// --------------------------------------------------------------------- flux

enum class FluxMethod { AnalyticUncoupled, QuadratureOnUPO };

std::string to_string(FluxMethod m);

struct FluxResult {
  double Q = 0.0;
  FluxMethod method = FluxMethod::AnalyticUncoupled;
  double delta_e = 0.0;
  /// Samples per period in the final quadrature (0 for the closed form).
  std::size_t samples = 0;
  /// Relative change against the half-resolution sum at the final level.
  double relative_change = 0.0;
  bool converged = true;
};

/// Q = 2 pi dE / sqrt(omega). Throws std::invalid_argument on dE < 0 or omega <= 0.
FluxResult flux_analytic_uncoupled(double delta_e, double omega);

/// Periodic trapezoid sum of px^2/m_s + py^2/m_b over every `stride`-th sample.
double trapezoid_action(const PeriodicOrbit& orbit, const SystemParams& p, std::size_t stride = 1);

/// Action integral over one period by the trapezoid rule on the orbit
/// samples. When the full and half-resolution sums differ by more than
/// 1e-8 relative, the orbit is re-sampled at twice the density (up to
/// 2^max_doublings times the original count).
FluxResult flux_quadrature(const PeriodicOrbit& orbit, const SystemParams& p, const IntegratorConfig& cfg,
                           int max_doublings = 4);

struct FluxRow {
  double delta_e = 0.0;
  double epsilon = 0.0;
  std::optional<FluxResult> result;  // empty for a gap
  double period = 0.0;
  std::string flag;                  // failure reason for gaps
};

/// Rows ordered epsilon-major, one per (epsilon, dE) pair. The orbit at the
/// first rung comes from orbit_at_excess_energy, later rungs by continuation.
/// A failed continuation leaves flagged gap rows for the rest of that epsilon.
std::vector<FluxRow> flux_curve(std::span<const double> delta_e_ladder, std::span<const double> epsilons,
                                SaddleSelector saddle, const SystemParams& p, const IntegratorConfig& cfg,
                                const OrbitOptions& opts = {}, unsigned workers = 1);

/// Saddle chosen by `which` among the saddle-centre equilibria.
EquilibriumPoint select_saddle(SaddleSelector which, const SystemParams& p);

// --------------------------------------------------------------- manifolds

enum class Branch { StablePlus, StableMinus, UnstablePlus, UnstableMinus };

std::string to_string(Branch b);
Branch branch_from_string(const std::string& name);
bool is_stable(Branch b);

struct Fiber {
  std::size_t orbit_index = 0;
  /// Negative times for stable fibers (integrated backwards).
  std::vector<double> times;
  std::vector<PhaseState> states;
  bool truncated = false;
};

struct ManifoldTube {
  Branch branch = Branch::UnstablePlus;
  double delta = 0.0;
  std::vector<Fiber> fibers;
};

struct TubeOptions {
  double delta = 1e-6;
  double t_prop = 30.0;
  std::size_t fiber_stride = 1;     // seed a fiber on every n-th orbit sample
  std::int64_t record_stride = 10;  // keep every n-th integration step
};

/// Eigen-directions of the monodromy carried along the orbit by the tangent
/// flow, normalized with positive x-component. Column k is for sample k.
struct OrbitFrames {
  std::vector<Vec4> unstable;
  std::vector<Vec4> stable;
};

OrbitFrames transport_eigenvectors(const PeriodicOrbit& orbit, const SystemParams& p, const IntegratorConfig& cfg);

/// Fibers start at samples[k] + sign * delta * frame and run forward
/// (unstable) or backward (stable) for t_prop. Requires lambda_u > 1.
ManifoldTube globalize_manifolds(const PeriodicOrbit& orbit, Branch branch, const TubeOptions& opts,
                                 const SystemParams& p, const IntegratorConfig& cfg, unsigned workers = 1);

}  // namespace pitchfork
