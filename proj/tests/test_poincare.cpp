#include <doctest.h>

#include <cmath>

#include "pitchfork/errors.hpp"
#include "pitchfork/poincare.hpp"

using namespace pitchfork;

namespace {

IntegratorConfig composed() {
  IntegratorConfig cfg;
  cfg.scheme = Scheme::Composed4;
  return cfg;
}

}  // namespace

TEST_CASE("seed ensemble lies on the energy surface") {
  const SystemParams p(1, 1, 1, 0.3);
  const double e = 0.05;
  const auto ics = seed_ensemble(e, 500, SectionWindow{}, 7, p);
  REQUIRE(ics.size() == 500);
  for (const auto& s : ics) {
    CHECK(s.y == 0.0);
    CHECK(s.py > 0.0);
    CHECK(std::abs(total_energy(s, p) - e) < 1e-12);
    CHECK(s.x >= -2.0);
    CHECK(s.x <= 2.0);
    CHECK(std::abs(s.px) <= 1.0);
  }
  CHECK(seed_ensemble(e, 500, SectionWindow{}, 7, p) == ics);
  CHECK(seed_ensemble(e, 500, SectionWindow{}, 8, p) != ics);
  // Draw k never depends on how many draws were requested.
  const auto head = seed_ensemble(e, 100, SectionWindow{}, 7, p);
  CHECK(std::equal(head.begin(), head.end(), ics.begin()));
}

TEST_CASE("empty admissible region") {
  const SystemParams p(1, 1, 1, 0.3);
  CHECK_THROWS_AS(seed_ensemble(-1.0, 10, SectionWindow{}, 1, p), EmptyAdmissibleRegion);
  CHECK_THROWS_AS(seed_ensemble(0.05, 10, SectionWindow{{5, 6}, {-1, 1}}, 1, p), EmptyAdmissibleRegion);
  CHECK_THROWS_AS(seed_ensemble(0.05, 0, SectionWindow{}, 1, p), std::invalid_argument);
}

TEST_CASE("hits lie on the section with the right orientation") {
  const SystemParams p(1, 1, 1, 0.3);
  const auto ics = seed_ensemble(0.05, 20, SectionWindow{}, 3, p);
  const auto orbits = section_map(ics, SectionSpec{}, 20, 500.0, p, composed());
  for (const auto& orbit : orbits) {
    CHECK(orbit.hits.size() == 20);
    for (std::size_t k = 0; k < orbit.states.size(); ++k) {
      CHECK(std::abs(orbit.states[k].y) < 1e-10);
      CHECK(orbit.states[k].py > 0.0);
      CHECK(std::abs(total_energy(orbit.states[k], p) - 0.05) < 1e-9);
      CHECK(orbit.hits[k][0] == orbit.states[k].x);
      if (k > 0) CHECK(orbit.times[k] > orbit.times[k - 1]);
    }
  }
}

TEST_CASE("uncoupled sections stay on level sets of the x energy") {
  const SystemParams p(1, 1, 1, 0.0);
  const auto ics = seed_ensemble(0.05, 20, SectionWindow{}, 5, p);
  const auto orbits = section_map(ics, SectionSpec{}, 50, 1000.0, p, composed());
  for (std::size_t i = 0; i < ics.size(); ++i) {
    const double ex = x_subsystem_energy(ics[i].x, ics[i].px, p);
    REQUIRE(orbits[i].hits.size() == 50);
    for (const auto& h : orbits[i].hits) CHECK(std::abs(x_subsystem_energy(h[0], h[1], p) - ex) < 1e-8);
  }
}

TEST_CASE("section map is deterministic across worker counts") {
  const SystemParams p(1, 1, 1, 0.5);
  const auto ics = seed_ensemble(0.1, 12, SectionWindow{}, 9, p);
  const auto one = section_map(ics, SectionSpec{}, 10, 300.0, p, composed(), 1);
  const auto four = section_map(ics, SectionSpec{}, 10, 300.0, p, composed(), 4);
  for (std::size_t i = 0; i < ics.size(); ++i) CHECK(one[i].hits == four[i].hits);
}

TEST_CASE("hit counts grow with the time budget") {
  const SystemParams p(1, 1, 1, 0.5);
  const auto ics = seed_ensemble(0.1, 8, SectionWindow{}, 11, p);
  std::vector<std::size_t> previous(ics.size(), 0);
  for (double t : {10.0, 40.0, 160.0}) {
    const auto orbits = section_map(ics, SectionSpec{}, 1000, t, p, composed());
    for (std::size_t i = 0; i < ics.size(); ++i) {
      CHECK(orbits[i].hits.size() >= previous[i]);
      previous[i] = orbits[i].hits.size();
      for (double ti : orbits[i].times) CHECK(ti <= t);
    }
  }
}

TEST_CASE("bath section records a custom coordinate pair") {
  const SystemParams p(1, 1, 1, 0.0);
  SectionSpec spec;
  spec.surface = EventSpec{[](const PhaseState& s) { return s.x - 1.0; }, Direction::Rising};
  spec.rate = [](const PhaseState& s, const SystemParams& q) { return s.px / q.m_s(); };
  spec.record = [](const PhaseState& s) { return std::array<double, 2>{s.y, s.py}; };
  const std::vector<PhaseState> ics{PhaseState(0.8, 0.2, 0.0, 0.0)};
  const auto orbits = section_map(ics, spec, 5, 200.0, p, composed());
  REQUIRE(orbits[0].hits.size() == 5);
  for (const auto& s : orbits[0].states) {
    CHECK(std::abs(s.x - 1.0) < 1e-10);
    CHECK(s.px > 0.0);
    // The bath is an independent oscillator at this coupling.
    CHECK(std::abs(0.5 * s.py * s.py + 0.5 * s.y * s.y - 0.02) < 1e-10);
  }
}
