#include "pdmp/simulator.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <sstream>

#include "pdmp/error.hpp"
#include "pdmp/parallel.hpp"

namespace pdmp {

namespace {

double crossing_time(const PdmpModel& model, const StatePoint& x, double xi, double lo,
                     double hi) {
  auto f = [&](double s) { return hazard_integral(model, x, s) - xi; };
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) < 1e-10; };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

std::string describe(const StatePoint& x) {
  std::ostringstream os;
  os << "mode " << x.mode << " (";
  for (std::size_t i = 0; i < x.coords.size(); ++i) os << (i ? ", " : "") << x.coords[i];
  os << ")";
  return os.str();
}

}  // namespace

Holding sample_holding(const PdmpModel& model, const StatePoint& x, Rng& rng,
                       const SimOptions& opts) {
  const StateSpace& s = *model.space;
  s.check(x);
  const double tp = s.hitting_time(x, 1);
  const double te = s.chart_exit_time(x, 1);
  const double limit = std::min(tp, te);
  const HoldingCause at_limit = tp <= te ? HoldingCause::BoundaryHit : HoldingCause::ChartExit;
  if (model.zero_rate) {
    if (std::isfinite(limit)) return {limit, at_limit};
    return {kInf, HoldingCause::Never};
  }
  const double xi = rng.exponential();
  if (std::isfinite(limit)) {
    const double total = hazard_integral(model, x, limit);
    if (total <= xi) return {limit, at_limit};
    return {crossing_time(model, x, xi, 0.0, limit), HoldingCause::RateJump};
  }
  double lo = 0.0;
  double hi = 1.0;
  while (hazard_integral(model, x, hi) < xi) {
    if (hi > opts.hazard_horizon) return {kInf, HoldingCause::Never};
    lo = hi;
    hi *= 2.0;
  }
  return {crossing_time(model, x, xi, lo, hi), HoldingCause::RateJump};
}

PathEvent step(const PdmpModel& model, const StatePoint& x, Rng& rng, const SimOptions& opts) {
  const StateSpace& s = *model.space;
  const Holding h = sample_holding(model, x, rng, opts);
  PathEvent ev;
  ev.time = h.time;
  if (h.cause == HoldingCause::Never) {
    ev.cause = EventCause::Horizon;
    ev.pre = x;
    ev.post = x;
    return ev;
  }
  if (h.cause == HoldingCause::RateJump) {
    ev.cause = EventCause::RateJump;
    ev.pre = s.flow_point(x, h.time);
  } else {
    const Advanced a = s.advance(x, h.time);
    ev.pre = a.point;
    if (h.cause == HoldingCause::ChartExit) {
      ev.cause = EventCause::BoundaryJump;
      ev.post = std::nullopt;
      return ev;
    }
    ev.cause = EventCause::BoundaryJump;
  }
  ev.post = model.jump.sample(ev.pre, rng);
  if (ev.post && (!s.in_domain(*ev.post) || s.on_plus(*ev.post)))
    fail(ErrorCode::Domain, "jump law produced a point outside the state space: " +
                                describe(*ev.post) + " from " + describe(ev.pre));
  return ev;
}

Path simulate_path(const PdmpModel& model, const StatePoint& x0, double horizon, Rng& rng,
                   const SimOptions& opts) {
  if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be positive");
  if (opts.max_jumps < 1) fail(ErrorCode::InvalidArgument, "max_jumps must be at least 1");
  const StateSpace& s = *model.space;
  s.check(x0);
  Path path;
  path.initial = x0;
  StatePoint x = x0;
  double t = 0.0;
  for (;;) {
    PathEvent ev = step(model, x, rng, opts);
    if (t + ev.time > horizon) {
      StatePoint final_state = s.flow_point(x, horizon - t);
      if (opts.record)
        path.events.push_back(PathEvent{horizon, EventCause::Horizon, final_state, final_state});
      path.final_state = std::move(final_state);
      return path;
    }
    if (path.jump_count == opts.max_jumps) {
      path.censored = true;
      if (opts.record)
        path.events.push_back(PathEvent{t + ev.time, EventCause::Censored, ev.pre, std::nullopt});
      return path;
    }
    t += ev.time;
    ev.time = t;
    ++path.jump_count;
    const bool dead = !ev.post;
    if (!dead) x = *ev.post;
    if (opts.record) path.events.push_back(std::move(ev));
    if (dead) {
      path.absorbed = true;
      return path;
    }
  }
}

InitialSampler::InitialSampler(const PdmpModel& model, const InitialLaw& law)
    : grid_(model.grid()), space_(*model.space), point_(law.point) {
  if (point_) {
    space_.check(*point_);
    return;
  }
  if (law.density.size() != grid_.size())
    fail(ErrorCode::InvalidArgument, "initial density does not match the grid");
  cumulative_.resize(grid_.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < grid_.size(); ++c) {
    if (law.density[c] < 0.0) fail(ErrorCode::InvalidArgument, "initial density is negative");
    acc += law.density[c] * grid_.weight(c);
    cumulative_[c] = acc;
  }
  if (!(acc > 0.0)) fail(ErrorCode::InvalidArgument, "initial density has zero mass");
}

StatePoint InitialSampler::operator()(Rng& rng) const {
  if (point_) return *point_;
  const double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const std::size_t cell =
      std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  StatePoint x = grid_.center(cell);
  const auto multi = grid_.multi_index(cell);
  const auto& axes = space_.mode(x.mode).axes;
  for (std::size_t a = 0; a < axes.size(); ++a)
    if (!axes[a].is_point)
      x.coords[a] = axes[a].edge(multi[a]) + rng.uniform() * axes[a].width();
  return x;
}

DensityEstimate estimate_density(const PdmpModel& model, const InitialLaw& init, double t,
                                 std::size_t n_paths, std::uint64_t seed, const SimOptions& opts) {
  if (!(t > 0.0)) fail(ErrorCode::InvalidArgument, "estimation time must be positive");
  if (n_paths == 0) fail(ErrorCode::InvalidArgument, "n_paths must be positive");
  const Grid& grid = model.grid();
  if (grid.size() == 0) fail(ErrorCode::InvalidArgument, "empty grid");
  const InitialSampler sampler(model, init);
  SimOptions quiet = opts;
  quiet.record = false;

  struct Tally {
    std::vector<std::uint64_t> counts;
    std::uint64_t censored = 0, absorbed = 0, off_grid = 0, jumps = 0;
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(worker_count(), n_paths));
  std::vector<Tally> tallies(workers);
  for (auto& tl : tallies) tl.counts.assign(grid.size(), 0);
  parallel_for(n_paths, [&](std::size_t b, std::size_t e, std::size_t w) {
    Tally& tl = tallies[w];
    for (std::size_t i = b; i < e; ++i) {
      Rng rng = Rng::stream(seed, i);
      const StatePoint x0 = sampler(rng);
      const Path p = simulate_path(model, x0, t, rng, quiet);
      tl.jumps += p.jump_count;
      if (p.censored) {
        ++tl.censored;
      } else if (p.absorbed) {
        ++tl.absorbed;
      } else if (auto c = grid.locate(*p.final_state)) {
        ++tl.counts[*c];
      } else {
        ++tl.off_grid;
      }
    }
  });
  DensityEstimate r;
  r.counts.assign(grid.size(), 0);
  std::uint64_t censored = 0, absorbed = 0, off_grid = 0;
  for (const auto& tl : tallies) {
    for (std::size_t c = 0; c < grid.size(); ++c) r.counts[c] += tl.counts[c];
    censored += tl.censored;
    absorbed += tl.absorbed;
    off_grid += tl.off_grid;
    r.total_jumps += tl.jumps;
  }
  const double n = static_cast<double>(n_paths);
  Values v(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c)
    v[c] = static_cast<double>(r.counts[c]) / (n * grid.weight(c));
  r.density = GridDensity::from_values(grid, std::move(v));
  r.censored_mass = static_cast<double>(censored + absorbed) / n;
  r.absorbed_fraction = static_cast<double>(absorbed) / n;
  r.off_grid_fraction = static_cast<double>(off_grid) / n;
  return r;
}

}  // namespace pdmp
