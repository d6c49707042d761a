#include "pitchfork/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "pitchfork/errors.hpp"

namespace pitchfork {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be finite");
}

bool wells_exist(BifurcationCase c) { return c == BifurcationCase::II || c == BifurcationCase::III; }

EquilibriumPoint make_equilibrium(const PhaseState& s, double energy, const SystemParams& p) {
  EquilibriumPoint eq;
  eq.state = s;
  eq.energy = energy;
  eq.eigenvalues = jacobian_spectrum(s, p);
  eq.stability = classify_equilibrium(s, p);
  return eq;
}

}  // namespace

SystemParams::SystemParams(double alpha, double beta, double omega, double epsilon, double m_s,
                           double m_b)
    : alpha_(alpha), beta_(beta), omega_(omega), epsilon_(epsilon), m_s_(m_s), m_b_(m_b) {
  require_finite(alpha, "alpha");
  require_finite(beta, "beta");
  require_finite(omega, "omega");
  require_finite(epsilon, "epsilon");
  require_finite(m_s, "m_s");
  require_finite(m_b, "m_b");
  if (m_s <= 0.0) throw std::invalid_argument("m_s must be positive");
  if (m_b <= 0.0) throw std::invalid_argument("m_b must be positive");
  if (omega <= 0.0) throw std::invalid_argument("omega must be positive");
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
}

SystemParams SystemParams::with_alpha(double alpha) const {
  return {alpha, beta_, omega_, epsilon_, m_s_, m_b_};
}
SystemParams SystemParams::with_beta(double beta) const {
  return {alpha_, beta, omega_, epsilon_, m_s_, m_b_};
}
SystemParams SystemParams::with_epsilon(double epsilon) const {
  return {alpha_, beta_, omega_, epsilon, m_s_, m_b_};
}

PhaseState::PhaseState(double x_, double y_, double px_, double py_) : x(x_), y(y_), px(px_), py(py_) {
  if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(px) && std::isfinite(py))) {
    throw std::domain_error("PhaseState components must be finite");
  }
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::CentreCentre: return "CentreCentre";
    case Stability::SaddleCentre: return "SaddleCentre";
    case Stability::NonHyperbolic: return "NonHyperbolic";
    case Stability::LineOfEquilibria: return "LineOfEquilibria";
  }
  return "?";
}

std::string to_string(BifurcationCase c) {
  switch (c) {
    case BifurcationCase::I: return "I";
    case BifurcationCase::II: return "II";
    case BifurcationCase::III: return "III";
    case BifurcationCase::IV: return "IV";
    case BifurcationCase::DegenerateLine: return "DegenerateLine";
    case BifurcationCase::DegenerateNonHyperbolic: return "DegenerateNonHyperbolic";
  }
  return "?";
}

double potential_energy(double x, double y, const SystemParams& p) {
  const double x2 = x * x;
  const double d = x - y;
  return -0.5 * p.alpha() * x2 + 0.25 * p.beta() * x2 * x2 + 0.5 * p.omega() * y * y +
         0.5 * p.epsilon() * d * d;
}

double kinetic_energy(const PhaseState& s, const SystemParams& p) {
  return 0.5 * (s.px * s.px / p.m_s() + s.py * s.py / p.m_b());
}

double total_energy(const PhaseState& s, const SystemParams& p) {
  return kinetic_energy(s, p) + potential_energy(s.x, s.y, p);
}

Vec2 force(double x, double y, const SystemParams& p) {
  return {p.alpha() * x - p.beta() * x * x * x + p.epsilon() * (y - x),
          -p.omega() * y + p.epsilon() * (x - y)};
}

Mat2 force_jacobian(double x, const SystemParams& p) {
  Mat2 k;
  k << p.alpha() - p.epsilon() - 3.0 * p.beta() * x * x, p.epsilon(),
       p.epsilon(), -p.omega() - p.epsilon();
  return k;
}

Vec4 vector_field(const PhaseState& s, const SystemParams& p) {
  const Vec2 f = force(s.x, s.y, p);
  return {s.px / p.m_s(), s.py / p.m_b(), f[0], f[1]};
}

Mat4 jacobian(const PhaseState& s, const SystemParams& p) {
  Mat4 j = Mat4::Zero();
  j(0, 2) = 1.0 / p.m_s();
  j(1, 3) = 1.0 / p.m_b();
  j.block<2, 2>(2, 0) = force_jacobian(s.x, p);
  return j;
}

Spectrum jacobian_spectrum(const PhaseState& s, const SystemParams& p) {
  Eigen::EigenSolver<Mat4> solver(jacobian(s, p), false);
  Spectrum out;
  for (int i = 0; i < 4; ++i) out[i] = solver.eigenvalues()[i];
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

double critical_alpha(const SystemParams& p) {
  return p.omega() * p.epsilon() / (p.omega() + p.epsilon());
}

double zero_tolerance(const SystemParams& p) {
  return 1e-9 * (1.0 + std::abs(p.alpha()) + p.omega() + p.epsilon());
}

LambdaPair eigenvalues_at_origin(const SystemParams& p) {
  const double a = p.alpha(), w = p.omega(), e = p.epsilon();
  const double trace = a - w - 2.0 * e;
  const double root = std::sqrt((w + a) * (w + a) + 4.0 * e * e);
  return {0.5 * (trace + root), 0.5 * (trace - root)};
}

LambdaPair well_eigenvalue_formula(const SystemParams& p) {
  const double a = p.alpha(), w = p.omega(), e = p.epsilon();
  const double ac = critical_alpha(p);
  const double trace = -2.0 * a - (w * w + 2.0 * e * e) / (w + e);
  const double d = 2.0 * a - (w + 3.0 * ac);
  const double root = std::sqrt(d * d + 4.0 * e * e);
  return {0.5 * (trace + root), 0.5 * (trace - root)};
}

LambdaPair eigenvalues_at_wells(const SystemParams& p) {
  if (!wells_exist(classify(p))) {
    throw NoSuchEquilibrium("the pair +-x2^e does not exist for case " + to_string(classify(p)));
  }
  return well_eigenvalue_formula(p);
}

double well_energy(const SystemParams& p) {
  const double d = p.alpha() - critical_alpha(p);
  return -d * d / (4.0 * p.beta());
}

BifurcationCase classify(const SystemParams& p) {
  // lambda_1 is increasing in alpha and vanishes at alpha_c, so its sign is
  // the sign of alpha - alpha_c with the zero threshold applied.
  const double l1 = eigenvalues_at_origin(p).first;
  const double tol = zero_tolerance(p);
  if (std::abs(l1) < tol) {
    return p.beta() == 0.0 ? BifurcationCase::DegenerateLine : BifurcationCase::DegenerateNonHyperbolic;
  }
  if (l1 < 0.0) return p.beta() < 0.0 ? BifurcationCase::III : BifurcationCase::I;
  return p.beta() > 0.0 ? BifurcationCase::II : BifurcationCase::IV;
}

Stability classify_equilibrium(const PhaseState& s, const SystemParams& p) {
  const Eigen::DiagonalMatrix<double, 2> scale(1.0 / std::sqrt(p.m_s()), 1.0 / std::sqrt(p.m_b()));
  const Mat2 weighted = scale * force_jacobian(s.x, p) * scale;
  Eigen::SelfAdjointEigenSolver<Mat2> solver(weighted, Eigen::EigenvaluesOnly);
  const double tol = zero_tolerance(p);
  int hyperbolic = 0;
  for (int i = 0; i < 2; ++i) {
    const double nu = solver.eigenvalues()[i];
    if (std::abs(nu) < tol) return Stability::NonHyperbolic;
    if (nu > 0.0) ++hyperbolic;
  }
  return hyperbolic == 0 ? Stability::CentreCentre : Stability::SaddleCentre;
}

std::vector<EquilibriumPoint> find_equilibria(const SystemParams& p) {
  const BifurcationCase c = classify(p);
  if (c == BifurcationCase::DegenerateLine) {
    throw DegenerateParameters("alpha = omega*epsilon/(omega+epsilon) with beta = 0: line of equilibria "
                               "y = x epsilon/(omega+epsilon)");
  }
  std::vector<EquilibriumPoint> out;
  out.push_back(make_equilibrium(PhaseState{}, 0.0, p));
  if (wells_exist(c)) {
    const double xe = std::sqrt((p.alpha() - critical_alpha(p)) / p.beta());
    const double ye = xe * p.epsilon() / (p.omega() + p.epsilon());
    const double energy = well_energy(p);
    out.push_back(make_equilibrium(PhaseState{xe, ye, 0.0, 0.0}, energy, p));
    out.push_back(make_equilibrium(PhaseState{-xe, -ye, 0.0, 0.0}, energy, p));
  }
  return out;
}

std::vector<EquilibriumPoint> saddle_points(const SystemParams& p) {
  std::vector<EquilibriumPoint> out;
  for (auto& eq : find_equilibria(p)) {
    if (eq.stability == Stability::SaddleCentre) out.push_back(std::move(eq));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.state.x < b.state.x; });
  return out;
}

double saddle_energy(const SystemParams& p) {
  const auto saddles = saddle_points(p);
  if (saddles.empty()) {
    throw NoSuchEquilibrium("no saddle-centre equilibrium for case " + to_string(classify(p)));
  }
  return saddles.front().energy;
}

CaseMap bifurcation_grid(Range alpha, Range beta, int n_alpha, int n_beta, const SystemParams& p) {
  if (n_alpha < 1 || n_beta < 1) throw std::invalid_argument("grid needs at least one point per axis");
  auto axis = [](Range r, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      v[static_cast<std::size_t>(i)] = n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (n - 1);
    }
    return v;
  };
  CaseMap map;
  map.alphas = axis(alpha, n_alpha);
  map.betas = axis(beta, n_beta);
  map.critical_alpha = critical_alpha(p);
  map.cases.reserve(map.alphas.size() * map.betas.size());
  for (double a : map.alphas) {
    for (double b : map.betas) {
      map.cases.push_back(classify(SystemParams(a, b, p.omega(), p.epsilon(), p.m_s(), p.m_b())));
    }
  }
  return map;
}

}  // namespace pitchfork
