#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pitchfork/dividing_surface.hpp"
#include "pitchfork/errors.hpp"
#include "pitchfork/integrator.hpp"
#include "pitchfork/model.hpp"
#include "pitchfork/poincare.hpp"
#include "pitchfork/transport.hpp"
#include "pitchfork/upo.hpp"

namespace pitchfork::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct Globals {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string output = "out";
  double alpha = 1.0, beta = 1.0, omega = 1.0, epsilon = 0.1, m_s = 1.0, m_b = 1.0;
  double dt = 1e-3;
  std::string scheme = "composed4";
  double event_tol = 1e-12;
};

struct Grid {
  double alpha_min = -2, alpha_max = 2, beta_min = -2, beta_max = 2;
  int n_alpha = 101, n_beta = 101;
};

struct Contours {
  std::vector<double> levels{0.1, 0.0, -0.1};
  double x_min = -2, x_max = 2, y_min = -2, y_max = 2;
  int resolution = 400;
};

struct Poincare {
  double delta_e = 0.01;
  std::size_t n = 50;
  int hits = 200;
  double t_max = 2000;
  double x_min = -2, x_max = 2, px_min = -1, px_max = 1;
};

struct Upo {
  std::vector<double> delta_e{0.01};
  std::string saddle = "auto";
  std::size_t samples = 512;
  bool mirror = false;
};

struct DsCmd {
  double delta_e = 0.01;
  std::size_t n = 5000;
  std::string orientation = "both";
  std::string saddle = "auto";
  bool analytic = false;
};

struct GapCmd {
  double delta_e = 0.01;
  std::size_t n = 5000;
  double cutoff = 100;
  std::size_t bins = 200;
  std::string saddle = "auto";
};

struct FluxCmd {
  std::vector<double> delta_e{0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1};
  std::vector<double> epsilons{0.0, 0.2, 0.5};
  std::string saddle = "auto";
};

struct TubeCmd {
  double delta_e = 0.01;
  std::string saddle = "auto";
  std::vector<std::string> branches{"UnstablePlus", "UnstableMinus", "StablePlus", "StableMinus"};
  double delta = 1e-6;
  double t_prop = 30;
  std::size_t fiber_stride = 8;
  std::int64_t record_stride = 10;
};

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  fs::path dir;
  SystemParams p;
  IntegratorConfig cfg;
  const Globals& g;
  std::ostream& out;
  std::string& stage;  // names the running sub-task for error reports
  std::vector<std::string> files;

  fs::path file(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

SaddleSelector parse_saddle(const std::string& name, const SystemParams& p) {
  if (name == "origin") return SaddleSelector::CaseII_IV_origin;
  if (name == "minus") return SaddleSelector::CaseIII_minus;
  if (name == "plus") return SaddleSelector::CaseIII_plus;
  if (name != "auto") throw ConfigError("saddle must be auto, origin, minus or plus");
  return classify(p) == BifurcationCase::III ? SaddleSelector::CaseIII_minus : SaddleSelector::CaseII_IV_origin;
}

std::string saddle_name(SaddleSelector s) {
  switch (s) {
    case SaddleSelector::CaseII_IV_origin: return "origin";
    case SaddleSelector::CaseIII_minus: return "minus";
    case SaddleSelector::CaseIII_plus: return "plus";
  }
  return "?";
}

json params_json(const SystemParams& p) {
  return {{"alpha", p.alpha()}, {"beta", p.beta()},   {"omega", p.omega()},
          {"epsilon", p.epsilon()}, {"m_s", p.m_s()}, {"m_b", p.m_b()}};
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

json orbit_json(const PeriodicOrbit& o, const SystemParams& p) {
  json j;
  j["params"] = params_json(p);
  j["e"] = o.energy;
  j["delta_E"] = o.excess_energy;
  j["period"] = o.period;
  j["multipliers"] = json::array();
  for (auto z : o.multipliers) j["multipliers"].push_back(complex_json(z));
  j["closure_residual"] = o.closure_residual;
  j["iterations"] = o.iterations;
  j["monodromy"] = json::array();
  for (int r = 0; r < 4; ++r) {
    j["monodromy"].push_back({o.monodromy(r, 0), o.monodromy(r, 1), o.monodromy(r, 2), o.monodromy(r, 3)});
  }
  j["samples"] = json::array();
  for (const auto& s : o.samples) j["samples"].push_back({s.x, s.y, s.px, s.py});
  return j;
}

void write_orbit_csv(const fs::path& path, const PeriodicOrbit& o, const SystemParams& p) {
  Csv csv(path, {"k", "t", "x", "y", "p_x", "p_y", "H"});
  for (std::size_t k = 0; k < o.samples.size(); ++k) {
    const auto& s = o.samples[k];
    csv.row({std::to_string(k), num(o.sample_time(k)), num(s.x), num(s.y), num(s.px), num(s.py),
             num(total_energy(s, p))});
  }
}

/// Saddle energy when a saddle exists, otherwise zero (dE then means e).
double reference_energy(const SystemParams& p) {
  try {
    return saddle_energy(p);
  } catch (const Error&) {
    return 0.0;
  }
}

// ----------------------------------------------------------------- commands

json cmd_classify(Context& c) {
  const BifurcationCase kase = classify(c.p);
  c.out << to_string(kase) << '\n';
  json j;
  j["case"] = to_string(kase);
  j["critical_alpha"] = critical_alpha(c.p);
  if (kase == BifurcationCase::DegenerateLine) {
    j["equilibria"] = "LineOfEquilibria";
    c.out << "line of equilibria y = x * " << num(c.p.epsilon() / (c.p.omega() + c.p.epsilon())) << '\n';
    return j;
  }
  Csv csv(c.file("equilibria.csv"), {"x", "y", "energy", "stability", "mu1_re", "mu1_im", "mu2_re", "mu2_im",
                                     "mu3_re", "mu3_im", "mu4_re", "mu4_im"});
  j["equilibria"] = json::array();
  for (const auto& eq : find_equilibria(c.p)) {
    std::vector<std::string> row{num(eq.state.x), num(eq.state.y), num(eq.energy), to_string(eq.stability)};
    for (auto z : eq.eigenvalues) {
      row.push_back(num(z.real()));
      row.push_back(num(z.imag()));
    }
    csv.row(row);
    c.out << "  (" << num(eq.state.x) << ", " << num(eq.state.y) << ")  H = " << num(eq.energy) << "  "
          << to_string(eq.stability) << '\n';
    j["equilibria"].push_back({{"x", eq.state.x}, {"y", eq.state.y}, {"energy", eq.energy},
                               {"stability", to_string(eq.stability)}});
  }
  return j;
}

json cmd_grid(Context& c, const Grid& o) {
  const CaseMap map = bifurcation_grid({o.alpha_min, o.alpha_max}, {o.beta_min, o.beta_max}, o.n_alpha, o.n_beta, c.p);
  Csv csv(c.file("bifurcation_grid.csv"), {"alpha", "beta", "case"});
  for (std::size_t i = 0; i < map.alphas.size(); ++i) {
    for (std::size_t jj = 0; jj < map.betas.size(); ++jj) {
      csv.row({num(map.alphas[i]), num(map.betas[jj]), to_string(map.at(i, jj))});
    }
  }
  return {{"critical_alpha", map.critical_alpha}, {"n_alpha", o.n_alpha}, {"n_beta", o.n_beta}};
}

json cmd_contours(Context& c, const Contours& o) {
  json j;
  j["levels"] = json::array();
  for (std::size_t i = 0; i < o.levels.size(); ++i) {
    const double level = o.levels[i];
    const std::string name = "contour_" + std::to_string(i) + ".csv";
    json entry{{"level", level}};
    try {
      const auto lines = equipotential_contour(level, {{o.x_min, o.x_max}, {o.y_min, o.y_max}}, o.resolution, c.p);
      Csv csv(c.file(name), {"polyline_id", "x", "y"});
      for (std::size_t k = 0; k < lines.size(); ++k) {
        for (const auto& pt : lines[k].points) csv.row({std::to_string(k), num(pt[0]), num(pt[1])});
      }
      entry["file"] = name;
      entry["polylines"] = lines.size();
    } catch (const EmptyContour&) {
      entry["file"] = nullptr;
      entry["polylines"] = 0;
    }
    j["levels"].push_back(entry);
  }
  return j;
}

json cmd_poincare(Context& c, const Poincare& o) {
  const double e_ref = reference_energy(c.p);
  const double e = e_ref + o.delta_e;
  c.stage = "poincare: seeding";
  const auto ics = seed_ensemble(e, o.n, {{o.x_min, o.x_max}, {o.px_min, o.px_max}}, c.g.seed, c.p);
  c.stage = "poincare: section map";
  const auto orbits = section_map(ics, SectionSpec{}, o.hits, o.t_max, c.p, c.cfg, c.g.workers);
  Csv csv(c.file("poincare.csv"), {"ic_index", "hit_index", "x", "p_x"});
  std::size_t escaped = 0;
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    escaped += orbits[i].escaped ? 1 : 0;
    for (std::size_t k = 0; k < orbits[i].hits.size(); ++k) {
      csv.row({std::to_string(i), std::to_string(k), num(orbits[i].hits[k][0]), num(orbits[i].hits[k][1])});
    }
  }
  return {{"params", params_json(c.p)}, {"e", e},        {"delta_E", o.delta_e}, {"seed", c.g.seed},
          {"dt", c.cfg.dt},             {"t_max", o.t_max}, {"escaped", escaped}};
}

json cmd_upo(Context& c, const Upo& o) {
  const SaddleSelector which = parse_saddle(o.saddle, c.p);
  OrbitOptions opts;
  opts.samples = o.samples;
  json j;
  j["saddle"] = saddle_name(which);
  j["orbits"] = json::array();
  const EquilibriumPoint saddle = select_saddle(which, c.p);
  for (std::size_t k = 0; k < o.delta_e.size(); ++k) {
    c.stage = "upo: dE = " + num(o.delta_e[k]);
    const PeriodicOrbit orbit = orbit_at_excess_energy(saddle, o.delta_e[k], c.p, c.cfg, opts);
    const std::string stem = "orbit_" + std::to_string(k);
    write_json(c.file(stem + ".json"), orbit_json(orbit, c.p));
    write_orbit_csv(c.file(stem + ".csv"), orbit, c.p);
    json entry{{"delta_E", o.delta_e[k]}, {"period", orbit.period},
               {"lambda_u", orbit.unstable_multiplier()}, {"file", stem + ".json"}};
    if (o.mirror) {
      const PeriodicOrbit m = mirror_orbit(orbit);
      write_json(c.file(stem + "_mirror.json"), orbit_json(m, c.p));
      write_orbit_csv(c.file(stem + "_mirror.csv"), m, c.p);
      entry["mirror_file"] = stem + "_mirror.json";
    }
    j["orbits"].push_back(entry);
  }
  return j;
}

json cmd_ds(Context& c, const DsCmd& o) {
  const SaddleSelector which = parse_saddle(o.saddle, c.p);
  Hemisphere h;
  try {
    h = hemisphere_from_string(o.orientation);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  DsSample ds;
  json j;
  if (o.analytic) {
    c.stage = "ds-sample: closed form";
    const double e = reference_energy(c.p) + o.delta_e;
    ds = analytic_ds_uncoupled(e, which, o.n, c.g.seed, h, c.p);
    j["orbit"] = "closed form";
  } else {
    c.stage = "ds-sample: orbit";
    auto orbit = std::make_shared<const PeriodicOrbit>(
        orbit_at_excess_energy(select_saddle(which, c.p), o.delta_e, c.p, c.cfg));
    c.stage = "ds-sample: sampling";
    ds = sample_ds(orbit, o.n, c.g.seed, h, c.p);
    write_json(c.file("ds_orbit.json"), orbit_json(*orbit, c.p));
    j["orbit"] = "ds_orbit.json";
  }
  Csv csv(c.file("ds.csv"), {"x", "y", "p_x", "p_y", "H"});
  for (const auto& s : ds.points) csv.row({num(s.x), num(s.y), num(s.px), num(s.py), num(total_energy(s, c.p))});
  j["seed"] = c.g.seed;
  j["n"] = o.n;
  j["orientation"] = to_string(h);
  j["e"] = ds.energy;
  j["delta_E"] = o.delta_e;
  j["saddle"] = saddle_name(which);
  j["orbit_point_measure"] = "uniform in orbit time (time-uniform samples)";
  j["py_sign"] = "fair coin per draw";
  return j;
}

json cmd_gaptime(Context& c, const GapCmd& o) {
  const SaddleSelector which = parse_saddle(o.saddle, c.p);
  const BifurcationCase kase = classify(c.p);
  GapTimeSetup setup;
  if (kase == BifurcationCase::II) {
    setup = case_ii_gap_setup(o.cutoff);
  } else if (kase == BifurcationCase::III && which == SaddleSelector::CaseIII_minus) {
    setup = case_iii_gap_setup(o.cutoff);
  } else {
    throw ConfigError("gap times are set up for case II, or case III starting on the minus saddle (got case " +
                      to_string(kase) + ", saddle " + saddle_name(which) + ")");
  }
  c.stage = "gaptime: orbit";
  auto orbit =
      std::make_shared<const PeriodicOrbit>(orbit_at_excess_energy(select_saddle(which, c.p), o.delta_e, c.p, c.cfg));
  c.stage = "gaptime: sampling";
  const DsSample ds = sample_ds(orbit, o.n, c.g.seed, Hemisphere::Backward, c.p);
  c.stage = "gaptime: integration";
  const auto records = gap_times(ds, setup, c.p, c.cfg, c.g.workers);
  {
    Csv csv(c.file("gaptimes.csv"), {"ic_index", "gap_time", "exit"});
    for (const auto& r : records) {
      csv.row({std::to_string(r.ic_index), r.gap_time ? num(*r.gap_time) : "", to_string(r.exit)});
    }
  }
  const GapTimeHistogram h = gap_time_histogram(records, o.bins, 0.0, o.cutoff);
  {
    Csv csv(c.file("histogram.csv"), {"bin_lo", "bin_hi", "count"});
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      csv.row({num(h.lo + i * h.bin_width()), num(h.lo + (i + 1) * h.bin_width()), std::to_string(h.counts[i])});
    }
  }
  std::size_t escaped = 0, returned = 0;
  for (const auto& r : records) {
    escaped += r.escaped ? 1 : 0;
    returned += r.return_time ? 1 : 0;
  }
  const auto mode = first_pulse_mode(h);
  json j{{"params", params_json(c.p)},
         {"e", orbit->energy},
         {"delta_E", o.delta_e},
         {"seed", c.g.seed},
         {"n", o.n},
         {"cutoff", o.cutoff},
         {"bins", o.bins},
         {"exit_boundary", setup.exit_boundary},
         {"censored", h.censored},
         {"censored_by_exit", {{"SameDS", h.censored_same_ds}, {"Boundary", h.censored_boundary},
                               {"Censored", h.censored_cutoff}}},
         {"returned_through_start", returned},
         {"escaped", escaped},
         {"unimodal", is_unimodal(h)}};
  j["first_pulse_mode"] = mode ? json(*mode) : json(nullptr);
  return j;
}

json cmd_flux(Context& c, const FluxCmd& o) {
  const SaddleSelector which = parse_saddle(o.saddle, c.p);
  c.stage = "flux: orbit continuation";
  const auto rows = flux_curve(o.delta_e, o.epsilons, which, c.p, c.cfg, {}, c.g.workers);
  Csv csv(c.file("flux.csv"), {"delta_E", "epsilon", "Q", "method"});
  json gaps = json::array();
  for (const auto& r : rows) {
    if (r.result) {
      csv.row({num(r.delta_e), num(r.epsilon), num(r.result->Q), to_string(r.result->method)});
    } else {
      gaps.push_back({{"delta_E", r.delta_e}, {"epsilon", r.epsilon}, {"flag", r.flag}});
    }
  }
  return {{"params", params_json(c.p)}, {"saddle", saddle_name(which)}, {"rows", rows.size() - gaps.size()},
          {"gaps", gaps}};
}

json cmd_manifolds(Context& c, const TubeCmd& o) {
  const SaddleSelector which = parse_saddle(o.saddle, c.p);
  c.stage = "manifolds: orbit";
  const PeriodicOrbit orbit = orbit_at_excess_energy(select_saddle(which, c.p), o.delta_e, c.p, c.cfg);
  TubeOptions opts;
  opts.delta = o.delta;
  opts.t_prop = o.t_prop;
  opts.fiber_stride = o.fiber_stride;
  opts.record_stride = o.record_stride;
  Csv csv(c.file("tube.csv"), {"branch", "fiber_index", "t", "x", "y", "p_x", "p_y"});
  json j{{"params", params_json(c.p)}, {"e", orbit.energy}, {"delta_E", o.delta_e}, {"delta", o.delta},
         {"t_prop", o.t_prop}, {"branches", json::array()}};
  for (const auto& name : o.branches) {
    Branch b;
    try {
      b = branch_from_string(name);
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what());
    }
    c.stage = "manifolds: " + name;
    const ManifoldTube tube = globalize_manifolds(orbit, b, opts, c.p, c.cfg, c.g.workers);
    std::size_t truncated = 0;
    for (std::size_t f = 0; f < tube.fibers.size(); ++f) {
      const Fiber& fiber = tube.fibers[f];
      truncated += fiber.truncated ? 1 : 0;
      for (std::size_t i = 0; i < fiber.states.size(); ++i) {
        const auto& s = fiber.states[i];
        csv.row({name, std::to_string(f), num(fiber.times[i]), num(s.x), num(s.y), num(s.px), num(s.py)});
      }
    }
    j["branches"].push_back({{"branch", name}, {"fibers", tube.fibers.size()}, {"truncated", truncated}});
  }
  return j;
}

void report_error(std::ostream& err, const fs::path& dir, const std::string& kind, const std::string& stage,
                  const std::string& message, int code) {
  json j{{"status", "error"}, {"exit_code", code}, {"kind", kind}, {"stage", stage}, {"message", message}};
  err << j.dump() << '\n';
  std::error_code ec;
  if (!dir.empty() && fs::is_directory(dir, ec)) {
    std::ofstream f(dir / "error.json");
    f << j.dump(2) << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"Quartic system coupled to a harmonic bath: equilibria, periodic orbits, transport"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with option values (flags take precedence)");

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
  app.add_option("--output", g.output, "Output directory")->capture_default_str();
  app.add_option("--alpha", g.alpha)->capture_default_str();
  app.add_option("--beta", g.beta)->capture_default_str();
  app.add_option("--omega", g.omega)->capture_default_str();
  app.add_option("--epsilon", g.epsilon)->capture_default_str();
  app.add_option("--m-s", g.m_s, "System mass")->capture_default_str();
  app.add_option("--m-b", g.m_b, "Bath mass")->capture_default_str();
  app.add_option("--dt", g.dt, "Integration step")->capture_default_str();
  app.add_option("--scheme", g.scheme, "leapfrog2 or composed4")
      ->check(CLI::IsMember({"leapfrog2", "composed4"}))
      ->capture_default_str();
  app.add_option("--event-tol", g.event_tol, "Event time tolerance")->capture_default_str();

  auto* classify_cmd = app.add_subcommand("classify", "Bifurcation case and equilibria");

  Grid grid;
  auto* grid_cmd = app.add_subcommand("bifurcation-grid", "Case map over (alpha, beta)");
  grid_cmd->add_option("--alpha-min", grid.alpha_min)->capture_default_str();
  grid_cmd->add_option("--alpha-max", grid.alpha_max)->capture_default_str();
  grid_cmd->add_option("--beta-min", grid.beta_min)->capture_default_str();
  grid_cmd->add_option("--beta-max", grid.beta_max)->capture_default_str();
  grid_cmd->add_option("--n-alpha", grid.n_alpha)->capture_default_str();
  grid_cmd->add_option("--n-beta", grid.n_beta)->capture_default_str();

  Contours contours;
  auto* contour_cmd = app.add_subcommand("contours", "Equipotential contours");
  contour_cmd->add_option("--levels", contours.levels)->capture_default_str();
  contour_cmd->add_option("--x-min", contours.x_min)->capture_default_str();
  contour_cmd->add_option("--x-max", contours.x_max)->capture_default_str();
  contour_cmd->add_option("--y-min", contours.y_min)->capture_default_str();
  contour_cmd->add_option("--y-max", contours.y_max)->capture_default_str();
  contour_cmd->add_option("--resolution", contours.resolution)->capture_default_str();

  Poincare poincare;
  auto* poincare_cmd = app.add_subcommand("poincare", "Surface of section y = 0, ydot > 0");
  poincare_cmd->add_option("--delta-e", poincare.delta_e, "Excess energy")->capture_default_str();
  poincare_cmd->add_option("--n", poincare.n, "Trajectories")->capture_default_str();
  poincare_cmd->add_option("--hits", poincare.hits)->capture_default_str();
  poincare_cmd->add_option("--t-max", poincare.t_max)->capture_default_str();
  poincare_cmd->add_option("--x-min", poincare.x_min)->capture_default_str();
  poincare_cmd->add_option("--x-max", poincare.x_max)->capture_default_str();
  poincare_cmd->add_option("--px-min", poincare.px_min)->capture_default_str();
  poincare_cmd->add_option("--px-max", poincare.px_max)->capture_default_str();

  Upo upo;
  auto* upo_cmd = app.add_subcommand("upo", "Unstable periodic orbits");
  upo_cmd->add_option("--delta-e", upo.delta_e, "Excess energies")->capture_default_str();
  upo_cmd->add_option("--saddle", upo.saddle, "auto, origin, minus or plus")->capture_default_str();
  upo_cmd->add_option("--samples", upo.samples)->capture_default_str();
  upo_cmd->add_flag("--mirror", upo.mirror, "Also write the mirror orbit");

  DsCmd ds;
  auto* ds_cmd = app.add_subcommand("ds-sample", "Points on the dividing surface");
  ds_cmd->add_option("--delta-e", ds.delta_e)->capture_default_str();
  ds_cmd->add_option("--n", ds.n)->capture_default_str();
  ds_cmd->add_option("--orientation", ds.orientation, "forward, backward or both")->capture_default_str();
  ds_cmd->add_option("--saddle", ds.saddle)->capture_default_str();
  ds_cmd->add_flag("--analytic", ds.analytic, "Closed-form surface (epsilon = 0)");

  GapCmd gap;
  auto* gap_cmd = app.add_subcommand("gaptime", "Gap-time ensemble and histogram");
  gap_cmd->add_option("--delta-e", gap.delta_e)->capture_default_str();
  gap_cmd->add_option("--n", gap.n)->capture_default_str();
  gap_cmd->add_option("--cutoff", gap.cutoff)->capture_default_str();
  gap_cmd->add_option("--bins", gap.bins)->capture_default_str();
  gap_cmd->add_option("--saddle", gap.saddle)->capture_default_str();

  FluxCmd flux;
  auto* flux_cmd = app.add_subcommand("flux", "Directional flux over (dE, epsilon)");
  flux_cmd->add_option("--delta-e", flux.delta_e)->capture_default_str();
  flux_cmd->add_option("--epsilons", flux.epsilons)->capture_default_str();
  flux_cmd->add_option("--saddle", flux.saddle)->capture_default_str();

  TubeCmd tube;
  auto* tube_cmd = app.add_subcommand("manifolds", "Stable and unstable manifold tubes");
  tube_cmd->add_option("--delta-e", tube.delta_e)->capture_default_str();
  tube_cmd->add_option("--saddle", tube.saddle)->capture_default_str();
  tube_cmd->add_option("--branches", tube.branches)->capture_default_str();
  tube_cmd->add_option("--delta", tube.delta)->capture_default_str();
  tube_cmd->add_option("--t-prop", tube.t_prop)->capture_default_str();
  tube_cmd->add_option("--fiber-stride", tube.fiber_stride)->capture_default_str();
  tube_cmd->add_option("--record-stride", tube.record_stride)->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, {}, "ConfigError", "parse", e.what(), kConfigError);
    return kConfigError;
  }

  const fs::path dir = g.output;
  std::string stage = "setup";
  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());

    const SystemParams p(g.alpha, g.beta, g.omega, g.epsilon, g.m_s, g.m_b);
    IntegratorConfig cfg;
    cfg.dt = g.dt;
    cfg.scheme = scheme_from_string(g.scheme);
    cfg.event_tol = g.event_tol;
    cfg.validate();

    Context c{dir, p, cfg, g, out, stage, {}};
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    c.stage = command;

    json meta;
    if (sub == classify_cmd) meta = cmd_classify(c);
    if (sub == grid_cmd) meta = cmd_grid(c, grid);
    if (sub == contour_cmd) meta = cmd_contours(c, contours);
    if (sub == poincare_cmd) meta = cmd_poincare(c, poincare);
    if (sub == upo_cmd) meta = cmd_upo(c, upo);
    if (sub == ds_cmd) meta = cmd_ds(c, ds);
    if (sub == gap_cmd) meta = cmd_gaptime(c, gap);
    if (sub == flux_cmd) meta = cmd_flux(c, flux);
    if (sub == tube_cmd) meta = cmd_manifolds(c, tube);
    stage = "output";

    meta["integrator"] = {{"dt", cfg.dt}, {"scheme", to_string(cfg.scheme)}, {"event_tol", cfg.event_tol}};
    write_json(c.file(command + ".json"), meta);

    {
      std::ofstream f(dir / "config.toml");
      f << app.config_to_str(true, false);
    }
    const CLI::Option* config_opt = app.get_config_ptr();
    if (config_opt->count() > 0) {
      const std::string config_path = config_opt->as<std::string>();
      fs::copy_file(config_path, dir / "input_config.toml", fs::copy_options::overwrite_existing);
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest{{"tool", "pitchfork"},
                  {"version", kVersion},
                  {"command", command},
                  {"arguments", std::vector<std::string>(args.begin() + 1, args.end())},
                  {"config", app.config_to_str(true, false)},
                  {"files", c.files},
                  {"wall_time_s", wall}};
    write_json(dir / "manifest.json", manifest);
    return kOk;
  } catch (const ConfigError& e) {
    report_error(err, dir, "ConfigError", stage, e.what(), kConfigError);
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    report_error(err, dir, "ConfigError", stage, e.what(), kConfigError);
    return kConfigError;
  } catch (const NonFiniteState& e) {
    report_error(err, dir, e.kind(), stage, e.what(), kNumericError);
    return kNumericError;
  } catch (const Error& e) {
    report_error(err, dir, e.kind(), stage, e.what(), kNumericError);
    return kNumericError;
  } catch (const std::exception& e) {
    report_error(err, dir, "Failure", stage, e.what(), kNumericError);
    return kNumericError;
  }
}

}  // namespace pitchfork::cli
