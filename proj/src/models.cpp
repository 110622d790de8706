#include "pdmp/models.hpp"

#include <cmath>
#include <numeric>

#include "pdmp/error.hpp"

namespace pdmp {

namespace {

std::shared_ptr<PdmpModel> skeleton(std::string name, std::vector<Mode> modes) {
  auto m = std::make_shared<PdmpModel>();
  m->name = std::move(name);
  m->space = std::make_shared<const StateSpace>(std::move(modes));
  return m;
}

// P0 that spreads all incoming mass uniformly over the interior grid.
std::function<Values(ValueView, ValueView)> uniform_restart(const PdmpModel& m) {
  const Grid* g = &m.grid();
  const BoundaryGrid* plus = &m.plus();
  const double total = std::accumulate(g->weights().begin(), g->weights().end(), 0.0);
  return [g, plus, total](ValueView rate_f, ValueView f_plus) {
    const double mass = g->mass(rate_f) + plus->mass(f_plus);
    return Values(g->size(), mass / total);
  };
}

std::function<Values(ValueView, ValueView)> nothing_to(std::size_t n) {
  return [n](ValueView, ValueView) { return Values(n, 0.0); };
}

std::optional<StatePoint> uniform_unit(const StatePoint&, Rng& rng) {
  return StatePoint{{rng.uniform()}, 0};
}

void constant_rate(PdmpModel& m, double q) {
  if (!(q >= 0.0) || !std::isfinite(q)) fail(ErrorCode::Config, "rate must be finite and nonnegative");
  m.zero_rate = q == 0.0;
  m.rate = [q](const StatePoint&) { return q; };
  m.cumulative_hazard = [q](const StatePoint&, double t) { return q * t; };
}

}  // namespace

ModelPtr build_drift_redistribute(std::size_t cells, double rate) {
  Mode mode{"main",
            {Axis::interval("x", 0.0, 1.0, Edge::Face, Edge::Face, 0.0, 1.0, cells,
                            std::make_shared<TranslationFlow>(1.0))}};
  auto m = skeleton("drift_redistribute", {mode});
  constant_rate(*m, rate);
  m->jump.sample = uniform_unit;
  m->jump.p0 = uniform_restart(*m);
  m->jump.p_partial = nothing_to(m->minus().size());
  validate(*m);
  return m;
}

ModelPtr build_free_flow(double win_lo, double win_hi, std::size_t cells, double speed,
                         double rate) {
  if (speed == 0.0) fail(ErrorCode::Config, "free flow needs a nonzero speed");
  Mode mode{"main",
            {Axis::interval("x", -kInf, kInf, Edge::Open, Edge::Open, win_lo, win_hi, cells,
                            std::make_shared<TranslationFlow>(speed))}};
  auto m = skeleton("free_flow", {mode});
  constant_rate(*m, rate);
  m->jump.sample = [](const StatePoint&, Rng&) { return std::optional<StatePoint>{}; };
  m->jump.p0 = nothing_to(m->grid().size());
  m->jump.p_partial = nothing_to(0);
  validate(*m);
  return m;
}

ModelPtr build_constant_rate(double q, std::size_t cells) {
  Mode mode{"main", {Axis::interval("x", 0.0, 1.0, Edge::Open, Edge::Open, 0.0, 1.0, cells, nullptr)}};
  auto m = skeleton("constant_rate", {mode});
  constant_rate(*m, q);
  m->jump.sample = uniform_unit;
  m->jump.p0 = uniform_restart(*m);
  m->jump.p_partial = nothing_to(0);
  validate(*m);
  return m;
}

double ScalarLaw::operator()(double x) const {
  switch (kind) {
    case Kind::Constant: return coef;
    case Kind::Linear: return coef * x;
    case Kind::Power: return coef * std::pow(x, power);
  }
  return 0.0;
}

ScalarLaw ScalarLaw::parse(const std::string& kind, double coef, double power) {
  ScalarLaw s;
  s.coef = coef;
  s.power = power;
  if (kind == "constant") s.kind = Kind::Constant;
  else if (kind == "linear") s.kind = Kind::Linear;
  else if (kind == "power") s.kind = Kind::Power;
  else fail(ErrorCode::Config, "unknown rate law '" + kind + "'");
  return s;
}

namespace {

AxisFlowPtr growth_flow(const CellCycleParams& p) {
  switch (p.growth.kind) {
    case ScalarLaw::Kind::Constant: return std::make_shared<TranslationFlow>(p.growth.coef);
    case ScalarLaw::Kind::Linear: return std::make_shared<LinearFlow>(p.growth.coef);
    case ScalarLaw::Kind::Power: break;
  }
  const ScalarLaw g = p.growth;
  return std::make_shared<NumericFlow>([g](double x) { return g(x); }, p.flow_step, 1e4);
}

}  // namespace

ModelPtr build_cell_cycle(const CellCycleParams& p) {
  p.validate();
  const AxisFlowPtr grow = growth_flow(p);
  auto size_axis = [&] {
    return Axis::interval("x", 0.0, kInf, Edge::Open, Edge::Open, 0.0, p.x_max, p.size_cells, grow);
  };
  Mode one{"I", {size_axis(), Axis::point("y", 0.0)}};
  Mode two{"II",
           {size_axis(), Axis::interval("y", 0.0, p.t2, Edge::Face, Edge::Face, 0.0, p.t2,
                                        p.phase2_cells, std::make_shared<TranslationFlow>(1.0))}};
  auto m = skeleton("cell_cycle", {one, two});
  const CellCycleParams params = p;
  const StateSpace* space = m->space.get();
  m->rate = [params](const StatePoint& x) { return x.mode == 0 ? params.phi(x.coords[0]) : 0.0; };
  m->cumulative_hazard = [params, space](const StatePoint& x, double t) {
    if (x.mode != 0 || t == 0.0) return 0.0;
    const double end = space->flow_point(x, t).coords[0];
    return std::max(0.0, params.Q(end) - params.Q(x.coords[0]));
  };
  m->zero_rate = p.entry.coef == 0.0;
  m->jump.sample = [params](const StatePoint& x, Rng&) -> std::optional<StatePoint> {
    if (x.mode == 0) return StatePoint{{x.coords[0], 0.0}, 1};
    if (x.coords[1] < params.t2)
      fail(ErrorCode::Domain, "phase II state jumped before the end of the phase");
    return StatePoint{{0.5 * x.coords[0], 0.0}, 0};
  };
  const Grid* g = &m->grid();
  const BoundaryGrid* plus = &m->plus();
  const BoundaryGrid* minus = &m->minus();
  const std::size_t n = p.size_cells;
  m->jump.p0 = [g, plus, n](ValueView, ValueView f_plus) {
    // Division: outgoing cell j of width h maps onto [x_j/2, x_{j+1}/2], inside size cell j/2.
    Values out(g->size(), 0.0);
    for (std::size_t j = 0; j < plus->size(); ++j) {
      const std::size_t k = g->mode_begin(0) + j / 2;
      if (j / 2 < n) out[k] += f_plus[j] * plus->weight(j) / g->weight(k);
    }
    return out;
  };
  m->jump.p_partial = [g, minus](ValueView rate_f, ValueView) {
    Values out(minus->size(), 0.0);
    for (std::size_t j = 0; j < minus->size(); ++j) {
      const std::size_t k = g->mode_begin(0) + j;
      out[j] = rate_f[k] * g->weight(k) / minus->weight(j);
    }
    return out;
  };
  validate(*m);
  return m;
}

ModelPtr build_kinetic_slab(const KineticSlabParams& p) {
  using R = KineticSlabParams::Reflection;
  const std::size_t nv = p.velocities.size();
  if (nv == 0 || p.weights.size() != nv)
    fail(ErrorCode::Config, "kinetic slab needs matching velocity and weight lists");
  if (!(p.length > 0.0)) fail(ErrorCode::Config, "kinetic slab needs positive length");
  std::vector<Mode> modes;
  for (std::size_t k = 0; k < nv; ++k) {
    if (p.velocities[k] == 0.0) fail(ErrorCode::Config, "zero velocity is not supported");
    modes.push_back(Mode{
        "v" + std::to_string(k),
        {Axis::interval("x", 0.0, p.length, Edge::Face, Edge::Face, 0.0, p.length, p.cells,
                        std::make_shared<TranslationFlow>(p.velocities[k])),
         Axis::point("v", p.velocities[k], p.weights[k])}});
  }
  auto m = skeleton("kinetic_slab", modes);
  constant_rate(*m, p.collision);
  const BoundaryGrid& plus = m->plus();
  const BoundaryGrid& minus = m->minus();
  const std::size_t np = plus.size();
  const std::size_t nm = minus.size();
  auto wall = [](const BoundaryCell& c) { return c.point.coords[0] > 0.0; };

  std::vector<std::vector<double>> T(np, std::vector<double>(nm, 0.0));
  if (p.reflection == R::Specular) {
    for (std::size_t i = 0; i < np; ++i) {
      const double v = plus.cells[i].point.coords[1];
      bool found = false;
      for (std::size_t j = 0; j < nm; ++j) {
        if (wall(minus.cells[j]) == wall(plus.cells[i]) && minus.cells[j].point.coords[1] == -v) {
          T[i][j] = 1.0;
          found = true;
        }
      }
      if (!found) fail(ErrorCode::Config, "specular reflection needs symmetric velocities");
    }
  } else if (p.reflection == R::Diffuse) {
    for (std::size_t i = 0; i < np; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < nm; ++j)
        if (wall(minus.cells[j]) == wall(plus.cells[i])) total += minus.weight(j);
      if (total == 0.0) fail(ErrorCode::Config, "diffuse wall has no incoming velocity");
      for (std::size_t j = 0; j < nm; ++j)
        if (wall(minus.cells[j]) == wall(plus.cells[i])) T[i][j] = minus.weight(j) / total;
    }
  } else {
    if (p.transfer.size() != np) fail(ErrorCode::Config, "transfer matrix has wrong row count");
    for (std::size_t i = 0; i < np; ++i) {
      if (p.transfer[i].size() != nm) fail(ErrorCode::Config, "transfer matrix has wrong column count");
      double col = 0.0;
      for (std::size_t j = 0; j < nm; ++j) {
        if (!(p.transfer[i][j] >= 0.0)) fail(ErrorCode::Config, "transfer entries must be nonnegative");
        col += p.transfer[i][j];
      }
      if (col > 1.0 + 1e-12) fail(ErrorCode::Config, "boundary operator norm exceeds 1");
    }
    T = p.transfer;
  }

  const double total_nu = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
  const std::vector<double> nu = p.weights;
  const std::size_t cells = p.cells;
  const StateSpace* space = m->space.get();
  const BoundaryGrid* plus_ptr = &plus;
  const BoundaryGrid* minus_ptr = &minus;
  m->jump.sample = [T, nu, total_nu, space, plus_ptr, minus_ptr](const StatePoint& x, Rng& rng)
      -> std::optional<StatePoint> {
    if (space->on_plus(x)) {
      std::size_t i = 0;
      while (i < plus_ptr->size() && plus_ptr->cells[i].point.mode != x.mode) ++i;
      double u = rng.uniform();
      for (std::size_t j = 0; j < minus_ptr->size(); ++j) {
        u -= T[i][j];
        if (u < 0.0) return minus_ptr->cells[j].point;
      }
      return std::nullopt;
    }
    double u = rng.uniform() * total_nu;
    std::size_t k = 0;
    while (k + 1 < nu.size() && u >= nu[k]) u -= nu[k++];
    return StatePoint{{x.coords[0], space->mode(k).axes[1].value}, k};
  };
  const Grid* g = &m->grid();
  m->jump.p0 = [g, nu, total_nu, cells](ValueView rate_f, ValueView) {
    Values out(g->size(), 0.0);
    for (std::size_t i = 0; i < cells; ++i) {
      double total = 0.0;
      for (std::size_t k = 0; k < nu.size(); ++k) total += rate_f[g->mode_begin(k) + i] * nu[k];
      for (std::size_t k = 0; k < nu.size(); ++k) out[g->mode_begin(k) + i] = total / total_nu;
    }
    return out;
  };
  m->jump.p_partial = [T, plus_ptr, minus_ptr](ValueView, ValueView f_plus) {
    Values out(minus_ptr->size(), 0.0);
    for (std::size_t i = 0; i < plus_ptr->size(); ++i) {
      const double mass = f_plus[i] * plus_ptr->weight(i);
      if (mass == 0.0) continue;
      for (std::size_t j = 0; j < minus_ptr->size(); ++j)
        out[j] += T[i][j] * mass / minus_ptr->weight(j);
    }
    return out;
  };
  validate(*m);
  return m;
}

}  // namespace pdmp
