#pragma once

// Unstable periodic orbits in the saddle bottleneck: closed forms for the
// uncoupled system, reversibility-based differential correction for the
// coupled one, energy continuation and the mirror partner.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchfork/integrator.hpp"
#include "pitchfork/model.hpp"

namespace pitchfork {

struct PeriodicOrbit {
  double energy = 0.0;
  double excess_energy = 0.0;
  double period = 0.0;
  /// Uniform in time over one period, samples[k] at t = k T / samples.size().
  /// samples[0] is a turning point (zero momenta) on the zero-velocity curve.
  std::vector<PhaseState> samples;
  Mat4 monodromy = Mat4::Identity();
  /// Ordered as {lambda_u, 1/lambda_u, then the two unit multipliers}.
  Spectrum multipliers{};
  /// |flow_T(samples[0]) - samples[0]| as measured when the orbit was built.
  double closure_residual = 0.0;
  int iterations = 0;  // Newton steps taken above tolerance; polishing excluded
  /// Integration steps per sample interval on the grid that built the orbit
  /// (0 for closed-form orbits).
  std::int64_t substeps = 0;

  double unstable_multiplier() const { return multipliers[0].real(); }
  double sample_time(std::size_t k) const { return period * static_cast<double>(k) / samples.size(); }
};

enum class SaddleSelector { CaseII_IV_origin, CaseIII_minus, CaseIII_plus };

struct OrbitOptions {
  std::size_t samples = 512;
  int max_iterations = 25;
  double tolerance = 1e-11;  // on the half-period momenta
  double energy_tolerance = 1e-10;
};

/// Harmonic bath orbit with x pinned at the chosen saddle (epsilon = 0 only):
/// amplitude A = sqrt(2 dE / omega), period T = 2 pi / Omega with
/// Omega = sqrt(omega / m_b). The phase is y = A cos(Omega t), i.e. samples
/// start at the upper turning point like differential_correction output.
/// The monodromy is the closed-form linearization about the pinned x.
/// Throws WrongRegime if epsilon != 0 or dE <= 0.
PeriodicOrbit analytic_upo_uncoupled(double e, SaddleSelector which, const SystemParams& p,
                                     std::size_t samples = 512);

/// Saddle state displaced along the centre eigenvector so the quadratic
/// energy equals dE = e - saddle.energy, momenta zero. Throws NotASaddle.
PhaseState initial_guess(double e, const EquilibriumPoint& saddle, const SystemParams& p);

/// Newton correction of a brake orbit. The start point (x0, y0(x0), 0, 0) is
/// kept on V = e; x0 and the half period tau are corrected until both
/// momenta vanish at tau. The full orbit follows by time reversal, the
/// monodromy from the tangent flow over one period on the same grid.
/// Throws NoConvergence or LostEnergy.
PeriodicOrbit differential_correction(const PhaseState& guess, double e, const SystemParams& p,
                                      const IntegratorConfig& cfg, const OrbitOptions& opts = {});

struct OrbitFamily {
  std::vector<PeriodicOrbit> orbits;
  std::optional<std::size_t> failed_at;  // index into the requested energies
  std::string failure;

  bool complete() const { return !failed_at.has_value(); }
};

/// Natural-parameter continuation over e0 + k (e_target - e0) / n_steps,
/// k = 1..n_steps (the endpoint is exactly e_target).
OrbitFamily continue_in_energy(const PeriodicOrbit& orbit, double e_target, int n_steps, const SystemParams& p,
                               const IntegratorConfig& cfg, const OrbitOptions& opts = {});

/// Continuation through an explicit list of energies.
OrbitFamily continue_through(const PeriodicOrbit& orbit, std::span<const double> energies,
                             const SystemParams& p, const IntegratorConfig& cfg, const OrbitOptions& opts = {});

/// Image under (x, y, px, py) -> (-x, -y, -px, -py): the symmetric partner.
PeriodicOrbit mirror_orbit(const PeriodicOrbit& orbit);

/// Orbit around `saddle` at excess energy dE: initial_guess followed by
/// differential_correction. Small dE is approached by continuation from
/// a tenth of the request when the direct solve fails.
PeriodicOrbit orbit_at_excess_energy(const EquilibriumPoint& saddle, double delta_e, const SystemParams& p,
                                     const IntegratorConfig& cfg, const OrbitOptions& opts = {});

/// Multipliers from a monodromy matrix, ordered as in PeriodicOrbit.
Spectrum floquet_multipliers(const Mat4& monodromy);

/// Largest deviation from the {lambda_u, 1/lambda_u, 1, 1} pattern: relative
/// error of the reciprocal pair and distance of the unit pair from 1, plus
/// the imaginary parts of the hyperbolic pair.
double multiplier_structure_error(const Spectrum& multipliers);

/// Canonical symplectic form for (x, y, px, py).
Mat4 symplectic_form();

/// max |M^T Omega M - Omega|.
double symplecticity_error(const Mat4& m);

/// Re-integrates one period from samples[0] with the orbit's step grid and
/// returns |flow_T(samples[0]) - samples[0]| in the max norm.
double closure_residual(const PeriodicOrbit& orbit, const SystemParams& p, const IntegratorConfig& cfg);

/// Step count per sample interval used for an orbit of period T.
std::int64_t substeps_per_sample(double period, std::size_t samples, double dt);

}  // namespace pitchfork
