#include "pdmp/core_model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "pdmp/error.hpp"

namespace pdmp {

void validate(const PdmpModel& model) {
  if (!model.space) fail(ErrorCode::Config, model.name + ": missing state space");
  if (!model.rate) fail(ErrorCode::Config, model.name + ": missing rate");
  if (!model.jump.sample || !model.jump.p0 || !model.jump.p_partial)
    fail(ErrorCode::Config, model.name + ": incomplete jump law");
  const Grid& g = model.grid();
  if (g.size() == 0) fail(ErrorCode::Config, model.name + ": empty grid");
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double r = model.rate(g.center(c));
    if (!(r >= 0.0) || !std::isfinite(r))
      fail(ErrorCode::Config, model.name + ": rate not finite and nonnegative on the grid");
  }
}

GridDensity GridDensity::from_values(const Grid& grid, Values values) {
  if (values.size() != grid.size())
    fail(ErrorCode::InvalidArgument, "density size does not match the grid");
  GridDensity d;
  d.total_mass = grid.mass(values);
  d.values = std::move(values);
  return d;
}

double DensityPair::norm(const PdmpModel& model) const {
  return interior.total_mass + model.minus().mass(boundary);
}

DensityPair DensityPair::make(const PdmpModel& model, Values interior,
                              Values boundary) {
  if (boundary.size() != model.minus().size())
    fail(ErrorCode::InvalidArgument, "boundary density size does not match the atlas");
  return DensityPair{GridDensity::from_values(model.grid(), std::move(interior)),
                     std::move(boundary)};
}

Advanced advance(const PdmpModel& model, const StatePoint& x, double t) {
  return model.space->advance(x, t);
}

double cocycle(const PdmpModel& model, const StatePoint& x, double t) {
  model.space->check(x);
  if (!std::isfinite(t)) fail(ErrorCode::InvalidArgument, "non-finite time");
  return model.space->jacobian(x, t);
}

double hitting_time(const PdmpModel& model, const StatePoint& x, Direction dir) {
  model.space->check(x);
  return model.space->hitting_time(x, static_cast<int>(dir));
}

namespace {

double integrate_rate(const std::function<double(double)>& f, double t) {
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, 0.0, t, 15, 1e-8, &err);
  if (!std::isfinite(v) || err > 1e-6 * std::max(1.0, std::abs(v)))
    fail(ErrorCode::Numeric,
         "hazard quadrature did not converge; supply a cumulative hazard");
  return v;
}

}  // namespace

double hazard_integral(const PdmpModel& model, const StatePoint& x, double t) {
  if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "negative hazard horizon");
  if (model.zero_rate || t == 0.0) return 0.0;
  if (model.cumulative_hazard) return model.cumulative_hazard(x, t);
  const StateSpace& s = *model.space;
  return integrate_rate([&](double r) { return model.rate(s.flow_point(x, r)); }, t);
}

double backward_hazard(const PdmpModel& model, const StatePoint& x, double t) {
  if (model.zero_rate || t == 0.0) return 0.0;
  const StateSpace& s = *model.space;
  if (model.cumulative_hazard) return model.cumulative_hazard(s.flow_point(x, -t), t);
  return integrate_rate([&](double r) { return model.rate(s.flow_point(x, -r)); }, t);
}

GridDensity sample_density(const PdmpModel& model,
                           const std::function<double(const StatePoint&)>& f) {
  const Grid& g = model.grid();
  Values v(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) v[c] = f(g.center(c));
  return GridDensity::from_values(g, std::move(v));
}

Values sample_boundary(const BoundaryGrid& side,
                       const std::function<double(const StatePoint&)>& f) {
  Values v(side.size());
  for (std::size_t i = 0; i < side.size(); ++i) v[i] = f(side.cells[i].point);
  return v;
}

Values rate_times(const PdmpModel& model, ValueView f) {
  const Grid& g = model.grid();
  Values out(g.size(), 0.0);
  if (model.zero_rate) return out;
  for (std::size_t c = 0; c < g.size(); ++c)
    if (f[c] != 0.0) out[c] = model.rate(g.center(c)) * f[c];
  return out;
}

double l1_distance(const Grid& grid, ValueView a, ValueView b) {
  double s = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) s += std::abs(a[c] - b[c]) * grid.weight(c);
  return s;
}

double pair_distance(const PdmpModel& model, const DensityPair& a,
                     const DensityPair& b) {
  double s = l1_distance(model.grid(), a.interior.values, b.interior.values);
  const BoundaryGrid& m = model.minus();
  for (std::size_t i = 0; i < m.size(); ++i)
    s += std::abs(a.boundary[i] - b.boundary[i]) * m.weight(i);
  return s;
}

}  // namespace pdmp
