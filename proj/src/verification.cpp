#include "pdmp/verification.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdmp/error.hpp"
#include "pdmp/parallel.hpp"
#include "pdmp/semigroup.hpp"

namespace pdmp {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

bool integrated_numerically(const StateSpace& s) {
  for (const auto& mode : s.modes())
    for (const auto& a : mode.axes)
      if (a.moves() && !a.flow->exact()) return true;
  return false;
}

StatePoint random_point(const PdmpModel& m, Rng& rng) {
  const Grid& g = m.grid();
  const std::size_t cell = std::min<std::size_t>(g.size() - 1, rng.below(g.size()));
  StatePoint x = g.center(cell);
  const auto multi = g.multi_index(cell);
  const auto& axes = m.space->mode(x.mode).axes;
  for (std::size_t a = 0; a < axes.size(); ++a)
    if (!axes[a].is_point) x.coords[a] = axes[a].edge(multi[a]) + rng.uniform() * axes[a].width();
  return x;
}

}  // namespace

LawReport law_suite(const PdmpModel& model, std::size_t samples, std::uint64_t seed) {
  const StateSpace& s = *model.space;
  LawReport r;
  r.samples = samples;
  if (integrated_numerically(s)) r.tolerance = 1e-6;
  Rng rng = Rng::stream(seed, 0);
  for (std::size_t k = 0; k < samples; ++k) {
    const StatePoint x = random_point(model, rng);
    const double tp = s.hitting_time(x, 1);
    const double span = std::isfinite(tp) ? tp : 2.0;
    const double t = rng.uniform() * 0.5 * span;
    const double u = rng.uniform() * 0.5 * span;
    const StatePoint xt = s.flow_point(x, t);
    const StatePoint a = s.flow_point(xt, u);
    const StatePoint b = s.flow_point(x, t + u);
    for (std::size_t i = 0; i < x.coords.size(); ++i)
      r.group = std::max(r.group, rel(a.coords[i], b.coords[i]));
    const double j1 = s.jacobian(x, t + u);
    const double j2 = s.jacobian(xt, u) * s.jacobian(x, t);
    r.cocycle = std::max(r.cocycle, std::abs(j1 - j2) / j1);
    const double h1 = hazard_integral(model, x, t + u);
    const double h2 = hazard_integral(model, x, t) + hazard_integral(model, xt, u);
    r.hazard = std::max(r.hazard, rel(h2, h1));
  }
  return r;
}

CovReport change_of_variables(const PdmpModel& model, const PointFn& f) {
  const StateSpace& s = *model.space;
  const Grid& g = s.grid();
  CovReport r;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const StatePoint x = g.center(c);
    if (std::isfinite(s.hitting_time(x, 1))) r.interior += f(x) * g.weight(c);
  }
  for (const BoundaryCell& cell : s.plus().cells) {
    const StatePoint& z = cell.point;
    double life = cell.lifetime;
    if (!std::isfinite(life)) life = s.window_exit_time(z, -1);
    auto along = [&](double u) { return f(s.flow_point(z, -u)) * s.jacobian(z, -u); };
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(along, 0.0, life, 20, 1e-12);
    r.boundary += v * cell.weight;
  }
  r.rel_error = std::abs(r.interior - r.boundary) / std::max(std::abs(r.boundary), 1e-300);
  return r;
}

double green_residual(const PdmpModel& model, ValueView f, ValueView transport_of_f) {
  const Grid& g = model.grid();
  if (f.size() != g.size() || transport_of_f.size() != g.size())
    fail(ErrorCode::InvalidArgument, "grid function has wrong length");
  const double bulk = g.mass(transport_of_f);
  const double in = model.minus().empty() ? 0.0 : model.minus().mass(trace_minus(model, f));
  const double out = model.plus().empty() ? 0.0 : model.plus().mass(trace_plus(model, f));
  return std::abs(bulk - in + out);
}

namespace {

// Interior cells reached from the incoming boundary: entry point, the span of
// travel times across the cell and the factor turning influx per m- into
// density.
struct EntryLine {
  std::size_t cell;
  double r_lo;
  double r_hi;
  StatePoint z;
  double factor;
};

std::vector<EntryLine> entry_lines(const PdmpModel& model) {
  const StateSpace& s = *model.space;
  const Grid& g = s.grid();
  const BoundaryGrid& minus = s.minus();
  std::vector<EntryLine> out;
  if (minus.empty()) return out;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const StatePoint x = g.center(c);
    const double r = s.hitting_time(x, -1);
    if (!std::isfinite(r)) continue;
    const Advanced a = s.advance(x, -r);
    if (a.status != FlowStatus::Boundary || !s.on_minus(a.point)) continue;
    const auto f = minus.find_face(a.point);
    if (!f) continue;
    const Face& face = minus.faces[*f];
    const Axis& ax = s.mode(face.mode).axes[face.axis];
    const std::size_t i = g.multi_index(c)[face.axis];
    const double t0 = ax.flow->time_to_reach(face.level, ax.edge(i), 1);
    const double t1 = ax.flow->time_to_reach(face.level, ax.edge(i + 1), 1);
    double factor = 1.0 / s.jacobian(a.point, r);
    if (!model.zero_rate) factor *= std::exp(-hazard_integral(model, a.point, r));
    out.push_back(EntryLine{c, std::min(t0, t1), std::max(t0, t1), a.point, factor});
  }
  return out;
}

// Running integral of the piecewise linear interpolant of node values.
class History {
 public:
  History(std::vector<double> v, double h) : v_(std::move(v)), h_(h), c_(v_.size(), 0.0) {
    for (std::size_t k = 1; k < v_.size(); ++k) c_[k] = c_[k - 1] + 0.5 * h_ * (v_[k - 1] + v_[k]);
  }
  double integral(double tau) const {
    if (tau <= 0.0) return 0.0;
    const double pos = tau / h_;
    const std::size_t last = v_.size() - 1;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(pos), last);
    if (k == last) return c_[last];
    const double a = pos - static_cast<double>(k);
    const double mid = v_[k] + a * (v_[k + 1] - v_[k]);
    return c_[k] + 0.5 * a * h_ * (v_[k] + mid);
  }

 private:
  std::vector<double> v_;
  double h_;
  std::vector<double> c_;
};

double tail_probability(const PdmpModel& model, const GridDensity& f0, double t,
                        const DuhamelOptions& o) {
  const InitialSampler sampler(model, InitialLaw::from(f0));
  SimOptions so;
  so.max_jumps = o.n_max + 1;
  so.record = false;
  std::vector<std::size_t> hits(worker_count() + 1, 0);
  parallel_for(o.tail_paths, [&](std::size_t b, std::size_t e, std::size_t w) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng = Rng::stream(o.seed, i);
      const Path p = simulate_path(model, sampler(rng), t, rng, so);
      if (p.censored || p.jump_count > o.n_max) ++hits[w];
    }
  });
  std::size_t total = 0;
  for (std::size_t h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(o.tail_paths);
}

}  // namespace

DuhamelResult duhamel_oracle(const PdmpModel& model, const GridDensity& f0, double t,
                             const DuhamelOptions& opts) {
  if (!(t > 0.0)) fail(ErrorCode::InvalidArgument, "time must be positive");
  if (opts.n_max > 2) fail(ErrorCode::InvalidArgument, "n_max is capped at 2");
  if (opts.time_nodes < 1 || opts.tail_paths < 1) fail(ErrorCode::InvalidArgument, "empty quadrature");
  const Grid& g = model.grid();
  if (f0.values.size() != g.size()) fail(ErrorCode::InvalidArgument, "density does not match the grid");

  DuhamelResult res;
  res.tail = tail_probability(model, f0, t, opts);
  if (res.tail > opts.tail_threshold)
    fail(ErrorCode::Tolerance, "refused: simulated probability of more than " +
                                   std::to_string(opts.n_max) + " jumps is " +
                                   std::to_string(res.tail) + " (threshold " +
                                   std::to_string(opts.tail_threshold) + ")");

  const std::size_t n = opts.time_nodes;
  const double h = t / static_cast<double>(n);
  std::vector<std::unique_ptr<TransportPlan>> lag(n + 1);
  for (std::size_t k = 1; k <= n; ++k) lag[k] = std::make_unique<TransportPlan>(model, k * h);
  auto S = [&](std::size_t k, const Values& f) { return k == 0 ? f : lag[k]->apply(f).values; };
  const auto lines = entry_lines(model);
  const BoundaryGrid& minus = model.minus();

  // u[i]: current generation at node i.
  std::vector<Values> u(n + 1);
  for (std::size_t i = 0; i <= n; ++i) u[i] = S(i, f0.values);
  Values total = u[n];
  res.term_masses.push_back(g.mass(u[n]));

  for (std::size_t gen = 1; gen <= opts.n_max; ++gen) {
    std::vector<Values> gain(n + 1), influx(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
      JumpTerms jt = jump_terms(model, GridDensity::from_values(g, u[j]));
      gain[j] = std::move(jt.gain.values);
      influx[j] = std::move(jt.influx);
    }
    std::vector<History> history;
    history.reserve(lines.size());
    for (const EntryLine& L : lines) {
      std::vector<double> b(n + 1);
      for (std::size_t k = 0; k <= n; ++k) b[k] = minus.interpolate(influx[k], L.z);
      history.emplace_back(std::move(b), h);
    }
    const bool last = gen == opts.n_max;
    std::vector<Values> next(n + 1);
    for (std::size_t i = last ? n : 0; i <= n; ++i) {
      Values v(g.size(), 0.0);
      for (std::size_t j = 0; j <= i && i > 0; ++j) {
        const double w = (j == 0 || j == i) ? 0.5 * h : h;
        const Values moved = S(i - j, gain[j]);
        for (std::size_t c = 0; c < v.size(); ++c) v[c] += w * moved[c];
      }
      const double s_now = static_cast<double>(i) * h;
      for (std::size_t e = 0; e < lines.size(); ++e) {
        const EntryLine& L = lines[e];
        const double span = history[e].integral(s_now - L.r_lo) - history[e].integral(s_now - L.r_hi);
        v[L.cell] += span / (L.r_hi - L.r_lo) * L.factor;
      }
      next[i] = std::move(v);
    }
    res.term_masses.push_back(g.mass(next[n]));
    for (std::size_t c = 0; c < total.size(); ++c) total[c] += next[n][c];
    u = std::move(next);
  }
  res.density = GridDensity::from_values(g, std::move(total));
  return res;
}

Values coarsen_masses(const PdmpModel& model, ValueView values, const std::vector<std::size_t>& factors) {
  const StateSpace& s = *model.space;
  const Grid& g = s.grid();
  if (values.size() != g.size()) fail(ErrorCode::InvalidArgument, "grid function has wrong length");
  Values out;
  for (std::size_t m = 0; m < s.modes().size(); ++m) {
    const auto& axes = s.mode(m).axes;
    std::vector<std::size_t> blocks(axes.size()), fac(axes.size(), 1);
    std::size_t count = 1;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      if (!axes[a].is_point && a < factors.size() && factors[a] > 1) fac[a] = factors[a];
      blocks[a] = (axes[a].size() + fac[a] - 1) / fac[a];
      count *= blocks[a];
    }
    const std::size_t base = out.size();
    out.resize(base + count, 0.0);
    for (std::size_t c = g.mode_begin(m); c < g.mode_end(m); ++c) {
      const auto multi = g.multi_index(c);
      std::size_t b = 0;
      for (std::size_t a = 0; a < axes.size(); ++a) b = b * blocks[a] + multi[a] / fac[a];
      out[base + b] += values[c] * g.weight(c);
    }
  }
  return out;
}

McVsPde mc_vs_pde(const PdmpModel& model, const GridDensity& init, double t, std::size_t n_paths,
                  std::uint64_t seed, double dt, const std::vector<std::size_t>& factors) {
  if (!(init.total_mass > 0.0)) fail(ErrorCode::InvalidArgument, "initial density has zero mass");
  const EvolveResult pde = evolve(model, init, t, dt);
  const DensityEstimate mc = estimate_density(model, InitialLaw::from(init), t, n_paths, seed);
  Values a = coarsen_masses(model, pde.density.values, factors);
  const Values b = coarsen_masses(model, mc.density.values, factors);
  McVsPde r;
  r.blocks = a.size();
  for (std::size_t k = 0; k < a.size(); ++k) r.l1 += std::abs(a[k] / init.total_mass - b[k]);
  r.pde_defect = 1.0 - pde.density.total_mass / init.total_mass;
  r.mc_lost = mc.censored_mass + mc.off_grid_fraction;
  r.mass_gap = std::abs(r.mc_lost - r.pde_defect);
  return r;
}

Duality resolvent_duality(const PdmpModel& model, const GridDensity& f, const PointFn& psi,
                          double lambda, std::size_t n_paths, std::uint64_t seed) {
  if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "lambda must be positive");
  if (n_paths < 2) fail(ErrorCode::InvalidArgument, "need at least two paths");
  const Grid& g = model.grid();
  Duality d;
  const ResolventResult rg = resolvent_G(model, f, lambda, 1e-13, 100000);
  for (std::size_t c = 0; c < g.size(); ++c)
    d.resolvent_side += rg.density.values[c] * psi(g.center(c)) * g.weight(c);
  d.scaled_mass = lambda * rg.density.total_mass;

  const StateSpace& s = *model.space;
  const double horizon = 20.0 / lambda;  // discount below 2e-9 beyond it
  const InitialSampler sampler(model, InitialLaw::from(f));
  using Gauss = boost::math::quadrature::gauss<double, 10>;
  Values score(n_paths, 0.0);
  parallel_for(n_paths, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng = Rng::stream(seed, i);
      StatePoint x = sampler(rng);
      const Path p = simulate_path(model, x, horizon, rng);
      double t0 = 0.0, acc = 0.0;
      for (const PathEvent& ev : p.events) {
        const double len = ev.time - t0;
        if (len > 0.0) {
          auto integrand = [&](double r) { return std::exp(-lambda * (t0 + r)) * psi(s.flow_point(x, r)); };
          const double pieces = std::ceil(len * std::max(lambda, 1.0));
          const double w = len / pieces;
          for (double k = 0.0; k < pieces; k += 1.0) acc += Gauss::integrate(integrand, k * w, (k + 1.0) * w);
        }
        if (!ev.post || ev.cause == EventCause::Horizon) break;
        x = *ev.post;
        t0 = ev.time;
      }
      score[i] = acc;
    }
  });
  double mean = 0.0, sq = 0.0;
  for (double v : score) mean += v;
  mean /= static_cast<double>(n_paths);
  for (double v : score) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(n_paths - 1));
  d.path_side = f.total_mass * mean;
  d.path_se = f.total_mass * sd / std::sqrt(static_cast<double>(n_paths));
  return d;
}

}  // namespace pdmp
