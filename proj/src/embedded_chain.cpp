#include "pdmp/embedded_chain.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "pdmp/error.hpp"
#include "pdmp/parallel.hpp"
#include "pdmp/semigroup.hpp"

namespace pdmp {

namespace {

// Weights of int_0^1 exp(-a u) (1-u) du and int_0^1 exp(-a u) u du.
void exp_weights(double a, double& w0, double& w1) {
  if (a < 1e-4) {
    const double p1 = 1.0 - a / 2.0 + a * a / 6.0;
    const double p2 = 0.5 - a / 3.0 + a * a / 8.0;
    w0 = p1 - p2;
    w1 = p2;
    return;
  }
  const double e = std::exp(-a);
  const double p1 = -std::expm1(-a) / a;
  const double p2 = (1.0 - (1.0 + a) * e) / (a * a);
  w0 = p1 - p2;
  w1 = p2;
}

struct Line {
  double value = 0.0;
  bool divergent = false;
};

// int_0^{t-} e^{-lambda t - H(t)} f(phi_{-t} x) J_{-t}(x) dt plus the boundary term,
// with the exponential integrated exactly and f J linear on each step.
Line backward_line(const PdmpModel& model, const StatePoint& x, ValueView f, ValueView f_minus,
                   double lambda, double step, double max_time) {
  const StateSpace& s = *model.space;
  const Grid& grid = s.grid();
  Line out;
  if (s.mode(x.mode).stationary()) {
    const double fx = grid.interpolate(f, x);
    if (fx == 0.0) return out;
    const double r = lambda + (model.zero_rate ? 0.0 : model.rate(x));
    if (r <= 0.0) {
      out.divergent = true;
      return out;
    }
    out.value = fx / r;
    return out;
  }
  const double tb = s.hitting_time(x, -1);
  const double tw = s.window_exit_time(x, -1);
  const double T = std::min({tb, tw, max_time});
  const bool capped = max_time < std::min(tb, tw);
  double E = 0.0;
  double J = 1.0;
  StatePoint p = x;
  if (T > 0.0) {
    const auto n = static_cast<long>(std::ceil(T / step));
    const double dt = T / static_cast<double>(n);
    double g = grid.interpolate(f, p);
    const bool exact_hazard = static_cast<bool>(model.cumulative_hazard);
    double rate_p = (model.zero_rate || exact_hazard) ? 0.0 : model.rate(p);
    for (long k = 1; k <= n; ++k) {
      StatePoint q = s.flow_point(p, -dt);
      J *= s.jacobian(p, -dt);
      double dh = lambda * dt;
      if (!model.zero_rate) {
        if (exact_hazard) {
          dh += model.cumulative_hazard(q, dt);
        } else {
          const double rate_q = model.rate(q);
          dh += 0.5 * (rate_p + rate_q) * dt;
          rate_p = rate_q;
        }
      }
      const double gq = grid.interpolate(f, q) * J;
      double w0, w1;
      exp_weights(dh, w0, w1);
      out.value += std::exp(-E) * dt * (g * w0 + gq * w1);
      E += dh;
      g = gq;
      p = std::move(q);
      if (E > 40.0) return out;
    }
    if (capped && std::exp(-E) * std::abs(g) > 1e-12) {
      out.divergent = true;
      return out;
    }
  }
  if (std::isfinite(tb) && tb <= tw && tb <= max_time && !f_minus.empty()) {
    const StatePoint z = s.advance(x, -tb).point;
    out.value += std::exp(-E) * J * s.minus().interpolate(f_minus, z);
  }
  return out;
}

}  // namespace

double default_quad_step(const PdmpModel& model) {
  double best = kInf;
  for (const Mode& m : model.space->modes()) {
    for (const Axis& a : m.axes) {
      if (!a.moves()) continue;
      double vmax = 0.0;
      for (std::size_t i = 0; i <= a.cells; ++i) vmax = std::max(vmax, std::abs(a.velocity(a.edge(i))));
      if (vmax > 0.0) best = std::min(best, a.width() / vmax);
    }
  }
  return std::isfinite(best) ? 0.5 * best : 1.0;
}

R0Result apply_R0(const PdmpModel& model, const DensityPair& pair, double lambda,
                  const R0Options& opts) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    fail(ErrorCode::InvalidArgument, "discount must be finite and nonnegative");
  const Grid& grid = model.grid();
  const BoundaryGrid& plus = model.plus();
  if (pair.interior.values.size() != grid.size() || pair.boundary.size() != model.minus().size())
    fail(ErrorCode::InvalidArgument, "density pair does not match the model grids");
  const double step = opts.quad_step > 0.0 ? opts.quad_step : default_quad_step(model);
  R0Result r;
  r.interior.assign(grid.size(), 0.0);
  r.outflux.assign(plus.size(), 0.0);
  const ValueView f = pair.interior.values;
  const ValueView fm = pair.boundary;
  const bool any = std::any_of(f.begin(), f.end(), [](double v) { return v != 0.0; }) ||
                   std::any_of(fm.begin(), fm.end(), [](double v) { return v != 0.0; });
  if (!any) return r;
  std::mutex lock;
  const std::size_t total = grid.size() + plus.size();
  parallel_for(total, [&](std::size_t b, std::size_t e, std::size_t) {
    std::vector<std::size_t> bad;
    for (std::size_t i = b; i < e; ++i) {
      Line line;
      if (i < grid.size()) {
        const StatePoint x = grid.center(i);
        if (opts.rate_cells_only && (model.zero_rate || model.rate(x) == 0.0)) continue;
        line = backward_line(model, x, f, fm, lambda, step, opts.max_time);
        r.interior[i] = line.value;
      } else {
        line = backward_line(model, plus.cells[i - grid.size()].point, f, fm, lambda, step,
                             opts.max_time);
        r.outflux[i - grid.size()] = line.value;
      }
      if (line.divergent) bad.push_back(i);
    }
    if (!bad.empty()) {
      std::lock_guard<std::mutex> g(lock);
      r.divergent.insert(r.divergent.end(), bad.begin(), bad.end());
    }
  });
  std::sort(r.divergent.begin(), r.divergent.end());
  return r;
}

DensityPair apply_K(const PdmpModel& model, const DensityPair& pair, double lambda,
                    const R0Options& opts) {
  R0Options o = opts;
  o.rate_cells_only = true;
  const R0Result r = apply_R0(model, pair, lambda, o);
  if (!r.divergent.empty())
    fail(ErrorCode::Numeric, "resolvent integral diverges on " + std::to_string(r.divergent.size()) +
                                 " cells");
  const Values rf = rate_times(model, r.interior);
  return DensityPair::make(model, model.jump.p0(rf, r.outflux), model.jump.p_partial(rf, r.outflux));
}

namespace {

DensityPair scaled(const PdmpModel& model, const DensityPair& p, double factor) {
  Values a = p.interior.values;
  Values b = p.boundary;
  for (double& v : a) v *= factor;
  for (double& v : b) v *= factor;
  return DensityPair::make(model, std::move(a), std::move(b));
}

DensityPair sum(const PdmpModel& model, const DensityPair& p, const DensityPair& q) {
  Values a = p.interior.values;
  Values b = p.boundary;
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += q.interior.values[i];
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += q.boundary[i];
  return DensityPair::make(model, std::move(a), std::move(b));
}

}  // namespace

KInvariant invariant_of_K(const PdmpModel& model, const DensityPair& init, double tol,
                          std::size_t max_iters, std::size_t period, const R0Options& opts) {
  if (period < 1) fail(ErrorCode::InvalidArgument, "period must be at least 1");
  const double n0 = init.norm(model);
  if (!(n0 > 0.0)) fail(ErrorCode::InvalidArgument, "initial pair has zero norm");
  KInvariant out;
  DensityPair q = scaled(model, init, 1.0 / n0);
  bool converged = false;
  for (out.iterations = 1; out.iterations <= max_iters; ++out.iterations) {
    DensityPair next = q;
    for (std::size_t j = 0; j < period; ++j) {
      next = apply_K(model, next, 0.0, opts);
      const double mass = next.norm(model);
      if (!(mass > 1e-12))
        fail(ErrorCode::Numeric, "no invariant density: jump-chain mass decays to zero");
      next = scaled(model, next, 1.0 / mass);
    }
    out.increment = pair_distance(model, next, q);
    q = std::move(next);
    if (out.increment < tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    fail(ErrorCode::Numeric, "power iteration did not converge in " + std::to_string(max_iters) +
                                 " sweeps (last increment " + std::to_string(out.increment) + ")");
  if (period > 1) {
    DensityPair acc = q;
    DensityPair cur = q;
    for (std::size_t j = 1; j < period; ++j) {
      cur = apply_K(model, cur, 0.0, opts);
      acc = sum(model, acc, cur);
    }
    q = scaled(model, acc, 1.0 / acc.norm(model));
  }
  const DensityPair image = apply_K(model, q, 0.0, opts);
  out.residual = pair_distance(model, image, q);
  out.mass_ratio = image.norm(model) / q.norm(model);
  if (out.mass_ratio < 1.0 - 1e-3)
    fail(ErrorCode::Numeric, "no invariant density: K loses mass on its limit (ratio " +
                                 std::to_string(out.mass_ratio) + ")");
  out.pair = std::move(q);
  return out;
}

Lift lift_invariant(const PdmpModel& model, const DensityPair& pair, const R0Options& opts) {
  R0Options o = opts;
  o.rate_cells_only = false;
  const R0Result r = apply_R0(model, pair, 0.0, o);
  if (!r.divergent.empty())
    fail(ErrorCode::Numeric, "lifted density is not integrable: " +
                                 std::to_string(r.divergent.size()) + " divergent cells");
  const double c = model.grid().mass(r.interior);
  if (!std::isfinite(c)) fail(ErrorCode::Numeric, "lifted mass is not finite");
  if (!(c > 0.0)) fail(ErrorCode::InvalidArgument, "zero mass, not a density");
  Values v = r.interior;
  for (double& x : v) x /= c;
  return Lift{GridDensity::from_values(model.grid(), std::move(v)), c};
}

DensityPair project_invariant(const PdmpModel& model, const GridDensity& f_star) {
  const Values rf = rate_times(model, f_star.values);
  const Values tr = trace_plus(model, f_star.values);
  const double c = model.grid().mass(rf) + model.plus().mass(tr);
  if (!(c > 0.0)) fail(ErrorCode::Numeric, "projection undefined: no jump activity (c* = 0)");
  if (!std::isfinite(c)) fail(ErrorCode::Numeric, "projection undefined: c* is not finite");
  Values a = model.jump.p0(rf, tr);
  Values b = model.jump.p_partial(rf, tr);
  for (double& v : a) v /= c;
  for (double& v : b) v /= c;
  return DensityPair::make(model, std::move(a), std::move(b));
}

double k_stochasticity_defect(const PdmpModel& model, const DensityPair& pair,
                              const R0Options& opts) {
  const double n = pair.norm(model);
  if (!(n > 0.0)) fail(ErrorCode::InvalidArgument, "pair has zero norm");
  return 1.0 - apply_K(model, pair, 0.0, opts).norm(model) / n;
}

DensityPair uniform_pair(const PdmpModel& model, double interior_share) {
  const Grid& g = model.grid();
  const BoundaryGrid& m = model.minus();
  if (m.empty()) interior_share = 1.0;
  const double gw = g.mass(Values(g.size(), 1.0));
  const double bw = m.total_weight();
  Values a(g.size(), interior_share / gw);
  Values b(m.size(), bw > 0.0 ? (1.0 - interior_share) / bw : 0.0);
  return DensityPair::make(model, std::move(a), std::move(b));
}

}  // namespace pdmp
