#pragma once

// Two-degree-of-freedom quartic system coupled bilinearly to a harmonic bath:
//
//   H = px^2/(2 m_s) + py^2/(2 m_b) - (alpha/2) x^2 + (beta/4) x^4
//       + (omega/2) y^2 + (epsilon/2) (x - y)^2
//
// Phase-space ordering everywhere is (x, y, px, py).

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pitchfork {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Spectrum = std::array<std::complex<double>, 4>;

/// Immutable model constants. Throws std::invalid_argument unless
/// m_s, m_b, omega > 0 and epsilon >= 0 (all finite).
class SystemParams {
 public:
  SystemParams(double alpha, double beta, double omega, double epsilon,
               double m_s = 1.0, double m_b = 1.0);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double omega() const noexcept { return omega_; }
  double epsilon() const noexcept { return epsilon_; }
  double m_s() const noexcept { return m_s_; }
  double m_b() const noexcept { return m_b_; }

  SystemParams with_alpha(double alpha) const;
  SystemParams with_beta(double beta) const;
  SystemParams with_epsilon(double epsilon) const;

  bool unit_masses() const noexcept { return m_s_ == 1.0 && m_b_ == 1.0; }

 private:
  double alpha_, beta_, omega_, epsilon_, m_s_, m_b_;
};

/// A point (x, y, px, py). Construction rejects non-finite components.
struct PhaseState {
  double x = 0.0;
  double y = 0.0;
  double px = 0.0;
  double py = 0.0;

  PhaseState() = default;
  PhaseState(double x_, double y_, double px_, double py_);

  Vec4 vec() const { return Vec4(x, y, px, py); }
  static PhaseState from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

  friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

/// (x, y, px, py) -> (x, y, -px, -py); conjugates the flow to its inverse.
inline PhaseState reverse_momenta(const PhaseState& s) { return {s.x, s.y, -s.px, -s.py}; }
/// (x, y, px, py) -> (-x, -y, -px, -py); the system is even under this map.
inline PhaseState negate(const PhaseState& s) { return {-s.x, -s.y, -s.px, -s.py}; }

enum class Stability { CentreCentre, SaddleCentre, NonHyperbolic, LineOfEquilibria };

struct EquilibriumPoint {
  PhaseState state;
  Spectrum eigenvalues;  // numeric Jacobian spectrum, sorted by (real, imag) descending
  Stability stability = Stability::CentreCentre;
  double energy = 0.0;
};

enum class BifurcationCase { I, II, III, IV, DegenerateLine, DegenerateNonHyperbolic };

std::string to_string(Stability s);
std::string to_string(BifurcationCase c);

double potential_energy(double x, double y, const SystemParams& p);
double kinetic_energy(const PhaseState& s, const SystemParams& p);
double total_energy(const PhaseState& s, const SystemParams& p);

/// Generalized force -grad V at (x, y).
Vec2 force(double x, double y, const SystemParams& p);
/// d(force)/d(x, y), i.e. minus the Hessian of V.
Mat2 force_jacobian(double x, const SystemParams& p);

Vec4 vector_field(const PhaseState& s, const SystemParams& p);
Mat4 jacobian(const PhaseState& s, const SystemParams& p);

/// Eigenvalues of the 4x4 Jacobian from a general (nonsymmetric) eigensolver.
Spectrum jacobian_spectrum(const PhaseState& s, const SystemParams& p);

/// omega * epsilon / (omega + epsilon): the pitchfork value of alpha.
double critical_alpha(const SystemParams& p);

/// Threshold below which an eigenvalue (or lambda value) counts as zero.
double zero_tolerance(const SystemParams& p);

struct LambdaPair {
  double first;   // lambda_1 (origin) or lambda_3 (wells): the hyperbolic one
  double second;  // lambda_2 or lambda_4: always negative (centre)
};

/// Unit-mass closed form at the origin; the Jacobian there has eigenvalues
/// +-sqrt(first) and +-i sqrt(-second).
LambdaPair eigenvalues_at_origin(const SystemParams& p);

/// Closed form at +-x2^e evaluated for any parameters, whether or not the
/// wells exist. Used for bifurcation analysis across the critical line.
LambdaPair well_eigenvalue_formula(const SystemParams& p);

/// Same as well_eigenvalue_formula but throws NoSuchEquilibrium unless the
/// pair +-x2^e exists.
LambdaPair eigenvalues_at_wells(const SystemParams& p);

/// Energy of the pair +-x2^e: -(alpha - alpha_c)^2 / (4 beta).
double well_energy(const SystemParams& p);

BifurcationCase classify(const SystemParams& p);

/// Origin first, then +x2^e and -x2^e when they exist. Throws
/// DegenerateParameters on the line-of-equilibria case.
std::vector<EquilibriumPoint> find_equilibria(const SystemParams& p);

/// Classify the equilibrium at `s` from the mass-weighted Hessian.
Stability classify_equilibrium(const PhaseState& s, const SystemParams& p);

/// Index-1 saddles (SaddleCentre equilibria), ordered by x ascending.
std::vector<EquilibriumPoint> saddle_points(const SystemParams& p);

/// Energy shared by the index-1 saddles (they are symmetric partners when
/// there are two); excess energy is measured from here. Throws
/// NoSuchEquilibrium when no saddle-centre equilibrium exists.
double saddle_energy(const SystemParams& p);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct CaseMap {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<BifurcationCase> cases;  // alpha-major: cases[i * betas.size() + j]
  double critical_alpha = 0.0;

  BifurcationCase at(std::size_t i, std::size_t j) const { return cases[i * betas.size() + j]; }
};

/// Classification over a uniform (alpha, beta) grid; omega, epsilon and
/// masses come from `p`. A single-point axis samples its range's lower end.
CaseMap bifurcation_grid(Range alpha, Range beta, int n_alpha, int n_beta, const SystemParams& p);

struct Window {
  Range x;
  Range y;
};

struct Polyline {
  std::vector<std::array<double, 2>> points;
  bool closed = false;  // closed loops repeat the first vertex at the end
};

/// Level set V(x, y) = level traced on a resolution x resolution grid.
/// Edge crossings are root-refined so every vertex satisfies
/// |V - level| < 1e-3 max(1, |level|). Throws EmptyContour if the level
/// never crosses the window.
std::vector<Polyline> equipotential_contour(double level, const Window& window, int resolution,
                                            const SystemParams& p);

}  // namespace pitchfork
