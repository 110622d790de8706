#include "pdmp/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "pdmp/embedded_chain.hpp"
#include "pdmp/error.hpp"
#include "pdmp/models.hpp"
#include "pdmp/semigroup.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/verification.hpp"

namespace pdmp {

using json = nlohmann::json;

struct RunConfig::Impl {
  json doc = json::object();
};

RunConfig::RunConfig() : impl_(std::make_unique<Impl>()) {}
RunConfig::~RunConfig() = default;
RunConfig::RunConfig(const RunConfig& other) : impl_(std::make_unique<Impl>(*other.impl_)) {}
RunConfig& RunConfig::operator=(const RunConfig& other) {
  *impl_ = *other.impl_;
  return *this;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  try {
    c.impl_->doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("malformed config: ") + e.what());
  }
  if (!c.impl_->doc.is_object()) fail(ErrorCode::Config, "config must be a JSON object");
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) fail(ErrorCode::Config, "empty override key");
  json v;
  try {
    v = json::parse(value);
  } catch (const json::exception&) {
    v = value;
  }
  json& doc = impl_->doc;
  std::string path = key;
  if (key.find('.') == std::string::npos && key != "seed") {
    std::string section = "task";
    for (const char* s : {"task", "model", "grid", "tolerances"})
      if (doc.contains(s) && doc[s].is_object() && doc[s].contains(key)) {
        section = s;
        break;
      }
    path = section + "." + key;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot - start);
    if (part.empty()) fail(ErrorCode::Config, "bad override key '" + key + "'");
    if (!node->is_object()) fail(ErrorCode::Config, "override '" + key + "' crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = v;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

std::string RunConfig::dump() const { return impl_->doc.dump(2); }

namespace {

const json& section(const json& doc, const char* name) {
  static const json empty = json::object();
  auto it = doc.find(name);
  if (it == doc.end()) return empty;
  if (!it->is_object()) fail(ErrorCode::Config, std::string("'") + name + "' must be an object");
  return *it;
}

template <class T>
T get(const json& j, const char* key, T def) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return def;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::Config, std::string("bad value for '") + key + "'");
  }
}

ScalarLaw law(const json& j, const char* key, ScalarLaw def) {
  auto it = j.find(key);
  if (it == j.end()) return def;
  if (it->is_number()) return ScalarLaw::parse("constant", it->get<double>());
  if (!it->is_object()) fail(ErrorCode::Config, std::string("'") + key + "' must be a number or {kind, coef, power}");
  return ScalarLaw::parse(get<std::string>(*it, "kind", "constant"), get<double>(*it, "coef", 1.0),
                          get<double>(*it, "power", 1.0));
}

struct Built {
  ModelPtr model;
  std::optional<CellCycleParams> cell_cycle;
  std::vector<std::size_t> coarsen;
  std::size_t period = 1;
  double green_tol = 1e-6;
  double mc_tol = 0.05;
};

Built build(const json& doc) {
  const json& m = section(doc, "model");
  const json& g = section(doc, "grid");
  std::string name = get<std::string>(m, "name", "");
  if (name == "M1") name = "drift_redistribute";
  if (name == "M2") name = "free_flow";
  if (name == "M3") name = "constant_rate";
  if (name == "M4") name = "cell_cycle";
  if (name == "M5") name = "kinetic_slab";
  const json& p = m.contains("params") ? section(m, "params") : m;

  Built b;
  if (name == "drift_redistribute") {
    b.model = build_drift_redistribute(get<std::size_t>(g, "cells", 200), get<double>(p, "rate", 0.0));
  } else if (name == "free_flow") {
    b.model = build_free_flow(get<double>(g, "lo", -1.0), get<double>(g, "hi", 4.0), get<std::size_t>(g, "cells", 200),
                              get<double>(p, "speed", 1.0), get<double>(p, "rate", 0.0));
  } else if (name == "constant_rate") {
    b.model = build_constant_rate(get<double>(p, "q", 1.0), get<std::size_t>(g, "cells", 200));
  } else if (name == "cell_cycle") {
    CellCycleParams c;
    c.growth = law(p, "growth", c.growth);
    c.entry = law(p, "entry", c.entry);
    c.t2 = get<double>(p, "t2", c.t2);
    c.flow_step = get<double>(p, "flow_step", c.flow_step);
    c.x_max = get<double>(g, "x_max", c.x_max);
    c.size_cells = get<std::size_t>(g, "size_cells", c.size_cells);
    c.phase2_cells = get<std::size_t>(g, "phase2_cells", c.phase2_cells);
    b.model = build_cell_cycle(c);
    b.cell_cycle = c;
    b.coarsen = {std::max<std::size_t>(1, c.size_cells / 100), c.phase2_cells};
    b.period = 2;
    b.mc_tol = 0.07;
  } else if (name == "kinetic_slab") {
    KineticSlabParams k;
    k.length = get<double>(p, "length", k.length);
    k.velocities = get<std::vector<double>>(p, "velocities", k.velocities);
    k.weights = get<std::vector<double>>(p, "weights", k.weights);
    k.collision = get<double>(p, "collision", k.collision);
    const std::string refl = get<std::string>(p, "reflection", "specular");
    if (refl == "specular") k.reflection = KineticSlabParams::Reflection::Specular;
    else if (refl == "diffuse") k.reflection = KineticSlabParams::Reflection::Diffuse;
    else if (refl == "custom") k.reflection = KineticSlabParams::Reflection::Custom;
    else fail(ErrorCode::Config, "unknown reflection '" + refl + "'");
    k.transfer = get<std::vector<std::vector<double>>>(p, "transfer", {});
    k.cells = get<std::size_t>(g, "cells", k.cells);
    b.model = build_kinetic_slab(k);
    b.period = 2;
    b.coarsen = {std::max<std::size_t>(1, k.cells * k.velocities.size() / 200)};
  } else if (name.empty()) {
    fail(ErrorCode::Config, "config has no model.name");
  } else {
    fail(ErrorCode::Config, "unknown model '" + name + "'");
  }
  b.coarsen = get<std::vector<std::size_t>>(g, "coarsen", b.coarsen);
  const json& tol = section(doc, "tolerances");
  b.green_tol = get<double>(tol, "green", b.green_tol);
  b.mc_tol = get<double>(tol, "mc", b.mc_tol);
  return b;
}

// Coordinates of x scaled to [0, 1] over the grid window, per interval axis.
double unit(const Axis& a, double x) { return (x - a.win_lo) / (a.win_hi - a.win_lo); }

struct Init {
  std::optional<StatePoint> point;
  GridDensity density;
};

Init make_init(const PdmpModel& model, const json& task) {
  json law = task.contains("init") ? task["init"] : json("uniform");
  if (law.is_string()) law = json{{"kind", law}};
  if (!law.is_object()) fail(ErrorCode::Config, "task.init must be a string or an object");
  const std::string kind = get<std::string>(law, "kind", "uniform");
  const auto& modes = model.space->modes();
  const long only = get<long>(law, "mode", -1);
  if (only >= static_cast<long>(modes.size())) fail(ErrorCode::Config, "init mode out of range");

  Init out;
  if (kind == "point") {
    StatePoint x{get<std::vector<double>>(law, "coords", {}), static_cast<std::size_t>(std::max(0L, only))};
    model.space->check(x);
    out.point = x;
    return out;
  }
  std::function<double(const StatePoint&)> shape;
  if (kind == "uniform") {
    shape = [](const StatePoint&) { return 1.0; };
  } else if (kind == "monomial") {
    const double k = get<double>(law, "power", 1.0);
    shape = [k](const StatePoint& x) { return std::pow(std::max(x.coords[0], 0.0), k); };
  } else if (kind == "gamma") {
    const double a = get<double>(law, "shape", 2.0), r = get<double>(law, "rate", 1.0);
    shape = [a, r](const StatePoint& x) {
      const double v = std::max(x.coords[0], 0.0);
      return std::pow(v, a - 1.0) * std::exp(-r * v);
    };
  } else if (kind == "indicator") {
    const double lo = get<double>(law, "lo", 0.0), hi = get<double>(law, "hi", 1.0);
    shape = [lo, hi](const StatePoint& x) { return x.coords[0] > lo && x.coords[0] < hi ? 1.0 : 0.0; };
  } else {
    fail(ErrorCode::Config, "unknown init kind '" + kind + "'");
  }
  auto d = sample_density(model, [&](const StatePoint& x) {
    if (only >= 0 && x.mode != static_cast<std::size_t>(only)) return 0.0;
    return shape(x);
  });
  if (!(d.total_mass > 0.0)) fail(ErrorCode::Config, "initial density has zero mass");
  for (double& v : d.values) v /= d.total_mass;
  out.density = GridDensity::from_values(model.grid(), std::move(d.values));
  return out;
}

const GridDensity& need_density(const Init& init, const char* what) {
  if (init.point) fail(ErrorCode::Config, std::string(what) + " needs a density initial law, not a point");
  return init.density;
}

struct Outcome {
  json masses = json::object();
  json residuals = json::object();
  json extra = json::object();
  Values density;
  std::optional<std::pair<const BoundaryGrid*, Values>> boundary;
  bool failed = false;
  std::string failure;
};

std::uint64_t seed_of(const json& doc) { return get<std::uint64_t>(doc, "seed", 1); }

Outcome do_simulate(const Built& b, const json& doc) {
  const json& task = section(doc, "task");
  const PdmpModel& m = *b.model;
  Init init = make_init(m, task);
  SimOptions o;
  o.max_jumps = get<std::size_t>(task, "max_jumps", o.max_jumps);
  o.record = false;
  InitialLaw law = init.point ? InitialLaw::at(*init.point) : InitialLaw::from(init.density);
  auto est = estimate_density(m, law, get<double>(task, "t", 1.0), get<std::size_t>(task, "paths", 100000),
                              seed_of(doc), o);
  Outcome out;
  out.masses = {{"input", 1.0},
                {"output", est.density.total_mass},
                {"censored", est.censored_mass},
                {"absorbed", est.absorbed_fraction},
                {"off_grid", est.off_grid_fraction}};
  out.extra["total_jumps"] = est.total_jumps;
  out.density = std::move(est.density.values);
  return out;
}

Outcome do_evolve(const Built& b, const json& doc) {
  const json& task = section(doc, "task");
  const PdmpModel& m = *b.model;
  const GridDensity f0 = need_density(make_init(m, task), "evolve");
  auto r = evolve(m, f0, get<double>(task, "t", 1.0), get<double>(task, "dt", 1e-3));
  Outcome out;
  out.masses = {{"input", f0.total_mass},
                {"output", r.density.total_mass},
                {"defect", f0.total_mass - r.density.total_mass},
                {"off_grid", r.off_grid_mass}};
  out.extra["steps"] = r.steps;
  out.extra["cfl_warning"] = r.cfl_warning;
  out.density = std::move(r.density.values);
  return out;
}

KInvariant k_invariant(const Built& b, const json& task) {
  const PdmpModel& m = *b.model;
  return invariant_of_K(m, uniform_pair(m, get<double>(task, "interior_share", 0.5)), get<double>(task, "tol", 1e-12),
                        get<std::size_t>(task, "max_iters", 10000), get<std::size_t>(task, "period", b.period));
}

Outcome do_invariant(const Built& b, const json& doc) {
  const json& task = section(doc, "task");
  const PdmpModel& m = *b.model;
  auto inv = k_invariant(b, task);
  auto lift = lift_invariant(m, inv.pair);
  const double roundtrip = pair_distance(m, project_invariant(m, lift.f_star), inv.pair);
  Outcome out;
  out.masses = {{"input", inv.pair.norm(m)}, {"output", lift.f_star.total_mass}, {"defect", 1.0 - inv.mass_ratio}};
  out.residuals = {{"k_residual", inv.residual}, {"increment", inv.increment}, {"roundtrip", roundtrip}};
  out.extra = {{"iterations", inv.iterations}, {"c", lift.c}};
  if (b.cell_cycle) {
    auto p1 = p1_invariant(*b.cell_cycle, get<double>(task, "tol", 1e-12), get<std::size_t>(task, "max_iters", 10000));
    auto cl = cell_cycle_lift(*b.cell_cycle, m, p1.f1);
    out.residuals["p1_residual"] = p1.residual;
    out.residuals["p1_mass_defect"] = p1.mass_defect;
    out.extra["uniqueness_value"] = p1.unique_value;
    out.extra["lift_mass"] = cl.mass;
    out.extra["lift_tail_share"] = cl.tail_share;
  }
  out.density = std::move(lift.f_star.values);
  return out;
}

Outcome do_embedded(const Built& b, const json& doc) {
  const json& task = section(doc, "task");
  const PdmpModel& m = *b.model;
  Outcome out;
  out.residuals["uniform_defect"] = k_stochasticity_defect(m, uniform_pair(m, 1.0));
  auto inv = k_invariant(b, task);
  out.masses = {{"input", 1.0}, {"output", inv.pair.norm(m)}, {"defect", 1.0 - inv.mass_ratio}};
  out.residuals["k_residual"] = inv.residual;
  out.residuals["increment"] = inv.increment;
  out.residuals["stochasticity_defect"] = k_stochasticity_defect(m, inv.pair);
  out.extra = {{"iterations", inv.iterations}, {"interior_mass", inv.pair.interior.total_mass},
               {"boundary_mass", m.minus().mass(inv.pair.boundary)}};
  out.density = std::move(inv.pair.interior.values);
  out.boundary = std::make_pair(&m.minus(), std::move(inv.pair.boundary));
  return out;
}

Outcome do_resolvent(const Built& b, const json& doc) {
  const json& task = section(doc, "task");
  const PdmpModel& m = *b.model;
  const GridDensity f0 = need_density(make_init(m, task), "resolvent");
  const double lambda = get<double>(task, "lambda", 1.0);
  auto r = resolvent_G(m, f0, lambda, get<double>(task, "tol", 1e-12), get<std::size_t>(task, "max_terms", 100000));
  Outcome out;
  const double scaled = lambda * r.density.total_mass;
  out.masses = {{"input", f0.total_mass}, {"output", r.density.total_mass}, {"defect", f0.total_mass - scaled}};
  out.residuals = {{"lambda_norm", scaled}};
  out.extra = {{"terms", r.term_masses.size()}, {"converged", r.converged}};
  if (!r.converged) {
    out.failed = true;
    out.failure = "resolvent series did not reach the tolerance";
  } else if (scaled > f0.total_mass * (1.0 + get<double>(section(doc, "tolerances"), "resolvent", 1e-4))) {
    out.failed = true;
    out.failure = "lambda |R f| exceeds |f|";
  }
  out.density = std::move(r.density.values);
  return out;
}

// A smooth test function: vanishes smoothly at open window edges, nonzero
// on faces so that the traces are exercised.
double test_fn(const PdmpModel& m, const StatePoint& x) {
  const auto& axes = m.space->modes()[x.mode].axes;
  double v = 1.0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (axes[a].is_point) continue;
    const double u = std::clamp(unit(axes[a], x.coords[a]), 0.0, 1.0);
    const bool faces = axes[a].lo_edge == Edge::Face && axes[a].hi_edge == Edge::Face;
    v *= faces ? 1.0 + u * (1.0 - u) : 16.0 * u * u * (1.0 - u) * (1.0 - u);
  }
  return v;
}

// Transport image by a central difference of s -> f(phi_{-s} x) J_{-s}(x).
Values transport_image(const PdmpModel& m, const std::function<double(const StatePoint&)>& f) {
  const Grid& g = m.grid();
  const StateSpace& s = *m.space;
  Values out(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const StatePoint x = g.center(i);
    if (s.modes()[x.mode].stationary()) continue;
    const auto& axes = s.modes()[x.mode].axes;
    double h = kInf;
    for (std::size_t a = 0; a < axes.size(); ++a)
      if (axes[a].moves())
        h = std::min(h, 1e-4 * axes[a].width() / std::max(std::abs(axes[a].velocity(x.coords[a])), 1e-12));
    const double back = f(s.flow_point(x, -h)) * s.jacobian(x, -h);
    const double fwd = f(s.flow_point(x, h)) * s.jacobian(x, h);
    out[i] = (back - fwd) / (2.0 * h);
  }
  return out;
}

json check(const std::string& name, double value, double tol, bool pass, const std::string& detail = "") {
  json j = {{"name", name}, {"value", value}, {"tolerance", tol}, {"passed", pass}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

json skipped(const std::string& name, const std::string& why) {
  return {{"name", name}, {"skipped", true}, {"passed", true}, {"detail", why}};
}

// Time for the fastest cell to move one width; evolve remaps are exact shifts
// there for translation flows.
double crossing_step(const PdmpModel& m) {
  const Grid& g = m.grid();
  double dt = kInf;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const StatePoint x = g.center(i);
    const auto& axes = m.space->modes()[x.mode].axes;
    for (std::size_t a = 0; a < axes.size(); ++a)
      if (axes[a].moves()) {
        const double v = std::abs(axes[a].velocity(x.coords[a]));
        if (v > 0.0) dt = std::min(dt, axes[a].width() / v);
      }
  }
  return std::isfinite(dt) ? dt : 1e-2;
}

bool has_jumps(const PdmpModel& m) { return !m.zero_rate || !m.plus().empty(); }

Outcome do_verify(const Built& b, const json& doc) {
  const json& task = section(doc, "task");
  const json& tol = section(doc, "tolerances");
  const PdmpModel& m = *b.model;
  const std::uint64_t seed = seed_of(doc);
  const std::size_t paths = get<std::size_t>(task, "paths", 100000);
  const double t = get<double>(task, "t", 1.0);
  const double dt = get<double>(task, "dt", 1e-3);
  const GridDensity f0 = need_density(make_init(m, task), "verify");
  json checks = json::array();

  auto laws = law_suite(m, get<std::size_t>(task, "law_samples", 1000), seed);
  checks.push_back(check("law_suite", std::max({laws.group, laws.cocycle, laws.hazard}), laws.tolerance, laws.passed()));

  auto f = [&m](const StatePoint& x) { return test_fn(m, x); };
  if (m.plus().empty()) {
    checks.push_back(skipped("change_of_variables", "no outgoing boundary"));
  } else {
    auto cov = change_of_variables(m, f);
    const double ct = get<double>(tol, "change_of_variables", 1e-3);
    checks.push_back(check("change_of_variables", cov.rel_error, ct, cov.rel_error < ct));
  }

  {
    const GridDensity fs = sample_density(m, f);
    const double r = green_residual(m, fs.values, transport_image(m, f));
    checks.push_back(check("green", r, b.green_tol, r < b.green_tol));
  }

  if (!has_jumps(m)) {
    checks.push_back(skipped("duhamel", "no jumps"));
  } else {
    DuhamelOptions o;
    o.seed = seed;
    o.time_nodes = get<std::size_t>(task, "duhamel_nodes", 100);
    o.tail_paths = get<std::size_t>(task, "duhamel_paths", 20000);
    const double td = get<double>(task, "duhamel_t", 0.3);
    try {
      auto d = duhamel_oracle(m, f0, td, o);
      auto ev = evolve(m, f0, td, std::min(get<double>(task, "duhamel_dt", crossing_step(m)), td));
      const double l1 = l1_distance(m.grid(), d.density.values, ev.density.values);
      const double bound = get<double>(tol, "duhamel", 5e-3) + d.tail;
      checks.push_back(check("duhamel", l1, bound, l1 <= bound));
    } catch (const PdmpError& e) {
      if (e.code() != ErrorCode::Tolerance) throw;
      checks.push_back(skipped("duhamel", e.what()));
    }
  }

  {
    auto r = mc_vs_pde(m, f0, t, paths, seed, dt, b.coarsen);
    checks.push_back(check("mc_vs_pde", r.l1, b.mc_tol, r.l1 <= b.mc_tol,
                           "mass gap " + std::to_string(r.mass_gap) + ", " + std::to_string(r.blocks) + " blocks"));
  }

  {
    const double lambda = get<double>(task, "lambda", 1.0);
    const auto& modes = m.space->modes();
    auto psi = [&modes](const StatePoint& x) {
      // First interval coordinate scaled to the window; zero off the grid,
      // where the grid side carries no mass.
      const auto& axes = modes[x.mode].axes;
      double v = -1.0;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        if (axes[a].is_point) continue;
        const double u = unit(axes[a], x.coords[a]);
        if (u < 0.0 || u > 1.0) return 0.0;
        if (v < 0.0) v = u;
      }
      return v < 0.0 ? 1.0 : v;
    };
    auto d = resolvent_duality(m, f0, psi, lambda, get<std::size_t>(task, "duality_paths", paths), seed);
    const double gap = std::abs(d.resolvent_side - d.path_side);
    const double bound = 3.0 * d.path_se + get<double>(tol, "duality_floor", 1e-4);
    checks.push_back(check("resolvent_duality", gap, bound, gap <= bound,
                           "grid " + std::to_string(d.resolvent_side) + ", paths " + std::to_string(d.path_side)));
    const double scaled = d.scaled_mass;
    const double slack = get<double>(tol, "resolvent", 1e-4);
    checks.push_back(check("resolvent_bound", scaled, f0.total_mass * (1.0 + slack),
                           scaled <= f0.total_mass * (1.0 + slack)));
  }

  Outcome out;
  out.masses = {{"input", f0.total_mass}};
  out.residuals = json::object();
  std::string failed;
  for (const auto& c : checks) {
    if (c.contains("value")) out.residuals[c["name"].get<std::string>()] = c["value"];
    if (!c["passed"].get<bool>()) failed += (failed.empty() ? "" : ", ") + c["name"].get<std::string>();
  }
  out.extra["checks"] = checks;
  if (!failed.empty()) {
    out.failed = true;
    out.failure = "checks failed: " + failed;
  }
  return out;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::Io, "cannot write '" + p.string() + "'");
}

}  // namespace

ModelPtr RunConfig::build_model() const { return build(impl_->doc).model; }

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate", "evolve", "invariant", "embedded", "resolvent", "verify"};
  return names;
}

std::string density_csv(const PdmpModel& model, ValueView values) {
  const Grid& g = model.grid();
  if (values.size() != g.size()) fail(ErrorCode::InvalidArgument, "density does not match the grid");
  const auto& modes = model.space->modes();
  std::size_t widest = 0;
  for (std::size_t k = 1; k < modes.size(); ++k)
    if (modes[k].axes.size() > modes[widest].axes.size()) widest = k;
  std::string out;
  for (const auto& a : modes[widest].axes) out += a.name + ",";
  out += "mode,value\n";
  const std::size_t dims = modes[widest].axes.size();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const StatePoint x = g.center(i);
    for (std::size_t a = 0; a < dims; ++a) out += (a < x.coords.size() ? format_value(x.coords[a]) : "") + ",";
    out += std::to_string(x.mode) + "," + format_value(values[i]) + "\n";
  }
  return out;
}

std::string boundary_csv(const PdmpModel& model, const BoundaryGrid& side, ValueView values) {
  if (values.size() != side.size()) fail(ErrorCode::InvalidArgument, "values do not match the boundary grid");
  std::size_t dims = 0;
  for (const auto& m : model.space->modes()) dims = std::max(dims, m.axes.size());
  std::string out;
  for (std::size_t a = 0; a < dims; ++a) out += "x" + std::to_string(a) + ",";
  out += "mode,weight,value\n";
  for (std::size_t i = 0; i < side.size(); ++i) {
    const StatePoint& x = side.cells[i].point;
    for (std::size_t a = 0; a < dims; ++a) out += (a < x.coords.size() ? format_value(x.coords[a]) : "") + ",";
    out += std::to_string(x.mode) + "," + format_value(side.cells[i].weight) + "," + format_value(values[i]) + "\n";
  }
  return out;
}

class Runner {
 public:
  static const json& doc(const RunConfig& c) { return c.impl_->doc; }
};

RunResult run(const RunConfig& config, const std::string& subcommand, const std::string& out_dir) {
  RunResult res;
  const auto start = std::chrono::steady_clock::now();
  try {
    const json& doc = Runner::doc(config);
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), subcommand) == names.end())
      fail(ErrorCode::Config, "unknown subcommand '" + subcommand + "'");
    const Built b = build(doc);
    Outcome o;
    if (subcommand == "simulate") o = do_simulate(b, doc);
    else if (subcommand == "evolve") o = do_evolve(b, doc);
    else if (subcommand == "invariant") o = do_invariant(b, doc);
    else if (subcommand == "embedded") o = do_embedded(b, doc);
    else if (subcommand == "resolvent") o = do_resolvent(b, doc);
    else o = do_verify(b, doc);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json summary = {{"subcommand", subcommand},
                    {"model", b.model->name},
                    {"parameters", doc},
                    {"masses", o.masses},
                    {"residuals", o.residuals},
                    {"wall_time_seconds", wall},
                    {"seed", seed_of(doc)}};
    for (auto it = o.extra.begin(); it != o.extra.end(); ++it) summary[it.key()] = it.value();
    if (o.failed) summary["failure"] = o.failure;
    res.summary = summary.dump(2) + "\n";

    if (!out_dir.empty()) {
      const std::filesystem::path dir(out_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) fail(ErrorCode::Io, "cannot create '" + out_dir + "': " + ec.message());
      if (!o.density.empty()) write_file(dir / "density.csv", density_csv(*b.model, o.density));
      if (o.boundary) write_file(dir / "boundary.csv", boundary_csv(*b.model, *o.boundary->first, o.boundary->second));
      write_file(dir / "summary.json", res.summary);
    }
    res.density = std::move(o.density);
    if (o.failed) {
      res.exit_code = kExitTolerance;
      res.message = o.failure;
      res.error = ErrorCode::Tolerance;
    }
  } catch (const PdmpError& e) {
    res.exit_code = e.code() == ErrorCode::Tolerance ? kExitTolerance : kExitUsage;
    res.message = e.what();
    res.error = e.code();
  } catch (const std::exception& e) {
    res.exit_code = kExitUsage;
    res.message = e.what();
    res.error = ErrorCode::Internal;
  }
  return res;
}

}  // namespace pdmp
