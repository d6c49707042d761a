#include "pitchfork/dividing_surface.hpp"

#include <cmath>
#include <stdexcept>

#include "pitchfork/errors.hpp"
#include "pitchfork/random.hpp"

namespace pitchfork {

namespace {

// Rounding can leave e - V a hair below zero on a converged orbit.
constexpr double kSlack = 1e-10;

double headroom(const PhaseState& s, double e, const SystemParams& p) {
  const double room = e - potential_energy(s.x, s.y, p);
  if (room < -kSlack) {
    throw EnergeticallyForbidden("orbit point (" + std::to_string(s.x) + ", " + std::to_string(s.y) +
                                 ") lies above the energy e = " + std::to_string(e));
  }
  return std::max(room, 0.0);
}

bool keep(double px, Hemisphere h) {
  if (std::abs(px) <= kHemisphereFloor) return false;
  switch (h) {
    case Hemisphere::Forward: return px < 0.0;
    case Hemisphere::Backward: return px > 0.0;
    case Hemisphere::Both: return true;
  }
  return false;
}

}  // namespace

std::string to_string(Hemisphere h) {
  switch (h) {
    case Hemisphere::Forward: return "forward";
    case Hemisphere::Backward: return "backward";
    case Hemisphere::Both: return "both";
  }
  return "?";
}

Hemisphere hemisphere_from_string(const std::string& name) {
  if (name == "forward") return Hemisphere::Forward;
  if (name == "backward") return Hemisphere::Backward;
  if (name == "both") return Hemisphere::Both;
  throw std::invalid_argument("unknown hemisphere '" + name + "' (forward, backward, both)");
}

DsSample sample_ds(std::shared_ptr<const PeriodicOrbit> orbit, std::size_t n, std::uint64_t seed,
                   Hemisphere orientation, const SystemParams& p) {
  if (!orbit || orbit->samples.empty()) throw std::invalid_argument("dividing surface needs a sampled orbit");
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  const double e = orbit->energy;
  std::vector<double> room(orbit->samples.size());
  for (std::size_t i = 0; i < room.size(); ++i) room[i] = headroom(orbit->samples[i], e, p);

  DsSample out;
  out.energy = e;
  out.orientation = orientation;
  out.source_orbit = orbit;
  const double ratio = p.m_b() / p.m_s();
  std::uniform_int_distribution<std::size_t> pick(0, orbit->samples.size() - 1);
  const std::uint64_t max_draws = 100 * static_cast<std::uint64_t>(n) + 1000;
  for (std::uint64_t k = 0; out.points.size() < n; ++k) {
    if (k == max_draws) {
      throw EnergeticallyForbidden("no momentum room on the orbit: " + std::to_string(out.points.size()) + " of " +
                                   std::to_string(n) + " points after " + std::to_string(k) + " draws");
    }
    auto rng = draw_stream(seed, k);
    const std::size_t i = pick(rng);
    const double px_max = std::sqrt(2.0 * p.m_s() * room[i]);
    const double px = uniform(rng, -px_max, px_max);
    const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0;
    if (!keep(px, orientation)) continue;
    const double py = sign * std::sqrt(std::max(0.0, 2.0 * p.m_b() * room[i] - ratio * px * px));
    const PhaseState& q = orbit->samples[i];
    out.points.emplace_back(q.x, q.y, px, py);
    out.orbit_index.push_back(i);
  }
  return out;
}

DsSample analytic_ds_uncoupled(double e, SaddleSelector which, std::size_t n, std::uint64_t seed,
                               Hemisphere orientation, const SystemParams& p) {
  if (p.epsilon() != 0.0) throw WrongRegime("closed-form dividing surface requires epsilon = 0");
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  double x_saddle = 0.0;
  double e_saddle = 0.0;
  if (which != SaddleSelector::CaseII_IV_origin) {
    if (!(p.alpha() < 0.0 && p.beta() < 0.0)) throw WrongRegime("saddle pair needs alpha < 0, beta < 0");
    x_saddle = std::sqrt(p.alpha() / p.beta());
    if (which == SaddleSelector::CaseIII_minus) x_saddle = -x_saddle;
    e_saddle = -p.alpha() * p.alpha() / (4.0 * p.beta());
  } else if (!(p.alpha() > 0.0)) {
    throw WrongRegime("origin is not a saddle unless alpha > 0");
  }
  const double de = e - e_saddle;
  if (de < 0.0) throw WrongRegime("energy is below the saddle");
  if (de == 0.0) {
    DsSample out;
    out.energy = e;
    out.orientation = orientation;
    out.points.assign(n, PhaseState{x_saddle, 0.0, 0.0, 0.0});
    out.orbit_index.assign(n, 0);
    return out;
  }
  auto orbit = std::make_shared<const PeriodicOrbit>(analytic_upo_uncoupled(e, which, p));
  DsSample out = sample_ds(orbit, n, seed, orientation, p);
  out.source_orbit.reset();
  return out;
}

}  // namespace pitchfork
