#include "pdmp/semigroup.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/error.hpp"

namespace pdmp {

namespace {

// Samples f J along the orbit through the face point at the times where the
// normal coordinate crosses the first cell centers, then extrapolates to the
// face with the Lagrange polynomial through those samples.
Values extrapolate(const PdmpModel& model, const BoundaryGrid& side, ValueView f, int direction) {
  const StateSpace& s = *model.space;
  const Grid& grid = s.grid();
  Values out(side.size(), 0.0);
  for (std::size_t i = 0; i < side.size(); ++i) {
    const BoundaryCell& c = side.cells[i];
    if (c.line.size() < 2)
      fail(ErrorCode::Domain, "boundary cell has fewer than two interior neighbours; grid too coarse");
    const Face& face = side.faces[c.face];
    const Axis& ax = s.mode(face.mode).axes[face.axis];
    const std::size_t n = std::min<std::size_t>(3, c.line.size());
    double t[3], v[3];
    for (std::size_t k = 0; k < n; ++k) {
      const double target = grid.center(c.line[k]).coords[face.axis];
      t[k] = ax.flow->time_to_reach(face.level, target, direction);
      const StatePoint p = s.flow_point(c.point, direction * t[k]);
      v[k] = grid.interpolate(f, p) * s.jacobian(c.point, direction * t[k]);
    }
    double at_face = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double w = 1.0;
      for (std::size_t l = 0; l < n; ++l)
        if (l != k) w *= t[l] / (t[l] - t[k]);
      at_face += w * v[k];
    }
    out[i] = std::max(0.0, at_face);
  }
  return out;
}

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

}  // namespace

Values trace_plus(const PdmpModel& model, ValueView f) { return extrapolate(model, model.plus(), f, -1); }

Values trace_minus(const PdmpModel& model, ValueView f) { return extrapolate(model, model.minus(), f, 1); }

JumpTerms jump_terms(const PdmpModel& model, const GridDensity& f) {
  const Values rf = rate_times(model, f.values);
  const Values tr = trace_plus(model, f.values);
  return JumpTerms{GridDensity::from_values(model.grid(), model.jump.p0(rf, tr)),
                   model.jump.p_partial(rf, tr)};
}

TransportPlan::TransportPlan(const PdmpModel& model, double dt) : model_(model), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "time step must be positive");
  const StateSpace& s = *model.space;
  const Grid& grid = s.grid();
  const BoundaryGrid& plus = s.plus();
  for (std::size_t m = 0; m < s.modes().size(); ++m) {
    const auto& axes = s.mode(m).axes;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const Axis& ax = axes[a];
      if (!ax.moves()) continue;
      AxisRemap r;
      r.mode = m;
      r.axis = a;
      r.src.resize(ax.cells + 1);
      for (std::size_t i = 0; i <= ax.cells; ++i) r.src[i] = ax.flow->advance(-dt, ax.edge(i));
      for (std::size_t f = 0; f < plus.faces.size(); ++f) {
        const Face& face = plus.faces[f];
        if (face.mode != m || face.axis != a) continue;
        (face.at_hi ? r.hi_face : r.lo_face) = static_cast<long>(f);
      }
      remaps_.push_back(std::move(r));
    }
  }
  survival_.assign(grid.size(), 1.0);
  if (!model.zero_rate) {
    for (std::size_t c = 0; c < grid.size(); ++c) {
      const double h = backward_hazard(model, grid.center(c), dt);
      const double v = std::exp(-h);
      survival_[c] = std::isfinite(v) ? std::min(1.0, v) : 1.0;
    }
  }
  const BoundaryGrid& minus = s.minus();
  feeds_.resize(minus.size());
  for (std::size_t j = 0; j < minus.size(); ++j) {
    const BoundaryCell& cell = minus.cells[j];
    const Face& face = minus.faces[cell.face];
    const Axis& ax = s.mode(face.mode).axes[face.axis];
    const std::size_t n = ax.cells;
    double s_near = 0.0;
    for (std::size_t k = 0; k < n && s_near < dt; ++k) {
      const double far = face.at_hi ? ax.edge(n - 1 - k) : ax.edge(k + 1);
      const double s_far = ax.flow->time_to_reach(face.level, far, 1);
      const double frac = (std::min(s_far, dt) - s_near) / dt;
      const std::size_t target = cell.line[k];
      feeds_[j].push_back(Feed{target, frac * cell.weight * dt / grid.weight(target)});
      s_near = s_far;
    }
  }
}

TransportPlan::Outcome TransportPlan::apply(ValueView f) const {
  const StateSpace& s = *model_.space;
  const Grid& grid = s.grid();
  const BoundaryGrid& plus = s.plus();
  Outcome out;
  out.values.assign(f.begin(), f.end());
  out.outflux_mass.assign(plus.size(), 0.0);
  out.hazard_loss.assign(grid.size(), 0.0);
  std::vector<double> rho, slope, cum, next;
  for (const AxisRemap& r : remaps_) {
    const auto& axes = s.mode(r.mode).axes;
    const Axis& ax = axes[r.axis];
    const std::size_t n = ax.cells;
    const double h = ax.width();
    const std::size_t stride = grid.stride(r.mode, r.axis);
    const std::size_t begin = grid.mode_begin(r.mode);
    const std::size_t size = grid.mode_end(r.mode) - begin;
    rho.resize(n);
    slope.resize(n);
    cum.resize(n + 1);
    next.resize(n);
    auto C = [&](double x) {
      if (x <= ax.win_lo) return 0.0;
      if (x >= ax.win_hi) return cum[n];
      const std::size_t j = std::min(n - 1, static_cast<std::size_t>((x - ax.win_lo) / h));
      const double u = std::clamp((x - ax.edge(j)) / h, 0.0, 1.0);
      return cum[j] + h * (rho[j] * u + slope[j] * 0.5 * (u * u - u));
    };
    std::size_t line = 0;
    for (std::size_t local = 0; local < size; ++local) {
      if ((local / stride) % n != 0) continue;
      const std::size_t base = begin + local;
      const double factor = grid.weight(base) / h;
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) {
        rho[j] = out.values[base + j * stride];
        any = any || rho[j] != 0.0;
      }
      if (!any) {
        ++line;
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (n == 1) {
          slope[j] = 0.0;
        } else if (j == 0) {
          const double d = rho[1] - rho[0];
          slope[j] = d > 0.0 ? std::min(d, 2.0 * rho[0]) : d;
        } else if (j == n - 1) {
          const double d = rho[j] - rho[j - 1];
          slope[j] = d < 0.0 ? std::max(d, -2.0 * rho[j]) : d;
        } else {
          const double dl = rho[j] - rho[j - 1];
          const double dr = rho[j + 1] - rho[j];
          slope[j] = minmod(0.5 * (dl + dr), minmod(2.0 * dl, 2.0 * dr));
        }
      }
      cum[0] = 0.0;
      for (std::size_t j = 0; j < n; ++j) cum[j + 1] = cum[j] + rho[j] * h;
      for (std::size_t i = 0; i < n; ++i)
        next[i] = std::max(0.0, C(r.src[i + 1]) - C(r.src[i])) / (ax.edge(i + 1) - ax.edge(i));
      const double out_lo = r.src[0] > ax.edge(0) ? C(r.src[0]) * factor : 0.0;
      const double out_hi = r.src[n] < ax.edge(n) ? (cum[n] - C(r.src[n])) * factor : 0.0;
      if (out_lo > 0.0) {
        if (r.lo_face >= 0) out.outflux_mass[plus.faces[r.lo_face].first + line] += out_lo;
        else out.off_grid += out_lo;
      }
      if (out_hi > 0.0) {
        if (r.hi_face >= 0) out.outflux_mass[plus.faces[r.hi_face].first + line] += out_hi;
        else out.off_grid += out_hi;
      }
      for (std::size_t i = 0; i < n; ++i) out.values[base + i * stride] = next[i];
      ++line;
    }
  }
  if (!model_.zero_rate) {
    for (std::size_t c = 0; c < grid.size(); ++c) {
      const double v = out.values[c];
      if (v == 0.0) continue;
      const double kept = v * survival_[c];
      out.hazard_loss[c] = (v - kept) * grid.weight(c);
      out.values[c] = kept;
    }
  }
  return out;
}

void TransportPlan::inject(Values& f, ValueView influx) const {
  for (std::size_t j = 0; j < feeds_.size(); ++j) {
    if (influx[j] == 0.0) continue;
    for (const Feed& fd : feeds_[j]) f[fd.cell] += influx[j] * fd.fraction;
  }
}

GridDensity transport_step(const PdmpModel& model, const GridDensity& f, double dt) {
  const TransportPlan plan(model, dt);
  return GridDensity::from_values(model.grid(), plan.apply(f.values).values);
}

namespace {

void jump_step(const PdmpModel& model, const TransportPlan& plan, Values& f, double& off_grid) {
  const Grid& grid = model.grid();
  const BoundaryGrid& plus = model.plus();
  TransportPlan::Outcome o = plan.apply(f);
  const double dt = plan.dt();
  off_grid += o.off_grid;
  Values rate_f(grid.size(), 0.0);
  for (std::size_t c = 0; c < grid.size(); ++c) rate_f[c] = o.hazard_loss[c] / (dt * grid.weight(c));
  Values f_plus(plus.size(), 0.0);
  for (std::size_t i = 0; i < plus.size(); ++i) f_plus[i] = o.outflux_mass[i] / (dt * plus.weight(i));
  const Values gain = model.jump.p0(rate_f, f_plus);
  const Values influx = model.jump.p_partial(rate_f, f_plus);
  for (std::size_t c = 0; c < grid.size(); ++c) o.values[c] += gain[c] * dt;
  plan.inject(o.values, influx);
  f = std::move(o.values);
}

}  // namespace

EvolveResult evolve(const PdmpModel& model, const GridDensity& f0, double t, double dt) {
  if (!(t > 0.0) || !(dt > 0.0) || dt > t * (1.0 + 1e-12))
    fail(ErrorCode::InvalidArgument, "evolve needs t > 0 and 0 < dt <= t");
  if (f0.values.size() != model.grid().size())
    fail(ErrorCode::InvalidArgument, "density does not match the grid");
  EvolveResult r;
  r.cfl_warning = dt > default_quad_step(model) * (1.0 + 1e-12);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t / dt - 1e-9)));
  const double last = t - static_cast<double>(n - 1) * dt;
  const TransportPlan plan(model, dt);
  Values f = f0.values;
  for (std::size_t k = 0; k + 1 < n; ++k) jump_step(model, plan, f, r.off_grid_mass);
  if (std::abs(last - dt) <= 1e-12 * dt) {
    jump_step(model, plan, f, r.off_grid_mass);
  } else {
    const TransportPlan tail(model, last);
    jump_step(model, tail, f, r.off_grid_mass);
  }
  r.steps = n;
  r.density = GridDensity::from_values(model.grid(), std::move(f));
  return r;
}

ResolventResult resolvent_G(const PdmpModel& model, const GridDensity& f, double lambda, double tol,
                            std::size_t max_terms, const R0Options& opts) {
  if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "resolvent needs lambda > 0");
  const Grid& grid = model.grid();
  R0Options o = opts;
  o.rate_cells_only = false;
  ResolventResult r;
  Values acc(grid.size(), 0.0);
  DensityPair pair = DensityPair::make(model, f.values, Values(model.minus().size(), 0.0));
  for (std::size_t n = 0; n < max_terms; ++n) {
    const R0Result t = apply_R0(model, pair, lambda, o);
    if (!t.divergent.empty()) fail(ErrorCode::Numeric, "resolvent term diverges");
    for (std::size_t c = 0; c < grid.size(); ++c) acc[c] += t.interior[c];
    const double mass = grid.mass(t.interior);
    r.term_masses.push_back(mass);
    if (mass < tol) {
      r.converged = true;
      break;
    }
    const Values rf = rate_times(model, t.interior);
    pair = DensityPair::make(model, model.jump.p0(rf, t.outflux), model.jump.p_partial(rf, t.outflux));
  }
  r.density = GridDensity::from_values(grid, std::move(acc));
  return r;
}

}  // namespace pdmp
