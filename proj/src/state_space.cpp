#include "pdmp/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "pdmp/error.hpp"

namespace pdmp {

Axis Axis::point(std::string name, double value, double weight) {
  if (!(weight > 0.0) || !std::isfinite(weight))
    fail(ErrorCode::Config, "atom weight must be positive and finite");
  Axis a;
  a.name = std::move(name);
  a.is_point = true;
  a.value = value;
  a.weight = weight;
  a.lo = a.hi = a.win_lo = a.win_hi = value;
  return a;
}

Axis Axis::interval(std::string name, double lo, double hi, Edge lo_edge,
                    Edge hi_edge, double win_lo, double win_hi,
                    std::size_t cells, AxisFlowPtr flow) {
  if (!(lo < hi)) fail(ErrorCode::Config, "axis " + name + ": empty domain");
  if (!(std::isfinite(win_lo) && std::isfinite(win_hi) && win_lo < win_hi))
    fail(ErrorCode::Config, "axis " + name + ": bad grid window");
  if (win_lo < lo || win_hi > hi)
    fail(ErrorCode::Config, "axis " + name + ": window exceeds domain");
  if ((lo_edge == Edge::Face && (!std::isfinite(lo) || win_lo != lo)) ||
      (hi_edge == Edge::Face && (!std::isfinite(hi) || win_hi != hi)))
    fail(ErrorCode::Config, "axis " + name + ": faces must bound the window");
  if (cells == 0) fail(ErrorCode::Config, "axis " + name + ": zero cells");
  Axis a;
  a.name = std::move(name);
  a.lo = lo;
  a.hi = hi;
  a.lo_edge = lo_edge;
  a.hi_edge = hi_edge;
  a.win_lo = win_lo;
  a.win_hi = win_hi;
  a.cells = cells;
  a.flow = std::move(flow);
  return a;
}

double Axis::edge(std::size_t i) const {
  if (i == cells) return win_hi;
  return win_lo + static_cast<double>(i) * width();
}

double Axis::center(std::size_t i) const {
  if (is_point) return value;
  return win_lo + (static_cast<double>(i) + 0.5) * width();
}

bool Mode::stationary() const {
  return std::none_of(axes.begin(), axes.end(),
                      [](const Axis& a) { return a.moves(); });
}

bool make_stencil(const std::vector<Axis>& axes,
                  const std::vector<std::size_t>& strides,
                  std::span<const double> coords, Stencil& out) {
  out.size = 1;
  out.index[0] = 0;
  out.weight[0] = 1.0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const Axis& ax = axes[a];
    if (ax.is_point) continue;
    double x = coords[a];
    const double slack = 1e-9 * ax.width();
    if (!(x >= ax.win_lo - slack && x <= ax.win_hi + slack)) return false;
    x = std::clamp(x, ax.win_lo, ax.win_hi);
    const double u = (x - ax.win_lo) / ax.width() - 0.5;
    std::size_t i = 0;
    double frac = 0.0;
    if (u >= static_cast<double>(ax.cells - 1)) {
      i = ax.cells - 1;
    } else if (u > 0.0) {
      i = static_cast<std::size_t>(u);
      frac = u - static_cast<double>(i);
    }
    const std::size_t s = strides[a];
    if (frac == 0.0) {
      for (int k = 0; k < out.size; ++k) out.index[k] += i * s;
      continue;
    }
    const int n = out.size;
    for (int k = 0; k < n; ++k) {
      out.index[n + k] = out.index[k] + (i + 1) * s;
      out.weight[n + k] = out.weight[k] * frac;
      out.index[k] += i * s;
      out.weight[k] *= 1.0 - frac;
    }
    out.size = 2 * n;
  }
  return true;
}

namespace {

std::vector<std::size_t> row_major_strides(const std::vector<Axis>& axes) {
  std::vector<std::size_t> s(axes.size(), 1);
  for (std::size_t a = axes.size(); a-- > 1;) s[a - 1] = s[a] * axes[a].size();
  return s;
}

std::size_t box_size(const std::vector<Axis>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  return n;
}

}  // namespace

Grid::Grid(const std::vector<Mode>& modes) : modes_(&modes) {
  for (const auto& m : modes) {
    const auto strides = row_major_strides(m.axes);
    const std::size_t n = box_size(m.axes);
    strides_.push_back(strides);
    begin_.push_back(begin_.back() + n);
    for (std::size_t c = 0; c < n; ++c) {
      double w = 1.0;
      for (std::size_t a = 0; a < m.axes.size(); ++a)
        w *= m.axes[a].measure((c / strides[a]) % m.axes[a].size());
      weights_.push_back(w);
    }
  }
}

std::size_t Grid::mode_of(std::size_t cell) const {
  auto it = std::upper_bound(begin_.begin(), begin_.end(), cell);
  return static_cast<std::size_t>(it - begin_.begin()) - 1;
}

std::size_t Grid::index(std::size_t m, std::span<const std::size_t> multi) const {
  std::size_t c = begin_[m];
  for (std::size_t a = 0; a < multi.size(); ++a) c += multi[a] * strides_[m][a];
  return c;
}

std::vector<std::size_t> Grid::multi_index(std::size_t cell) const {
  const std::size_t m = mode_of(cell);
  const auto& axes = (*modes_)[m].axes;
  std::vector<std::size_t> multi(axes.size());
  const std::size_t local = cell - begin_[m];
  for (std::size_t a = 0; a < axes.size(); ++a)
    multi[a] = (local / strides_[m][a]) % axes[a].size();
  return multi;
}

StatePoint Grid::center(std::size_t cell) const {
  StatePoint p;
  p.mode = mode_of(cell);
  const auto& axes = (*modes_)[p.mode].axes;
  const auto multi = multi_index(cell);
  p.coords.resize(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a)
    p.coords[a] = axes[a].center(multi[a]);
  return p;
}

std::optional<std::size_t> Grid::locate(const StatePoint& x) const {
  const auto& axes = (*modes_)[x.mode].axes;
  std::size_t c = begin_[x.mode];
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const Axis& ax = axes[a];
    if (ax.is_point) continue;
    const double v = x.coords[a];
    if (!(v >= ax.win_lo && v <= ax.win_hi)) return std::nullopt;
    auto i = static_cast<std::size_t>((v - ax.win_lo) / ax.width());
    c += std::min(i, ax.cells - 1) * strides_[x.mode][a];
  }
  return c;
}

double Grid::interpolate(std::span<const double> values,
                         const StatePoint& x) const {
  Stencil st;
  if (!make_stencil((*modes_)[x.mode].axes, strides_[x.mode], x.coords, st))
    return 0.0;
  double v = 0.0;
  const std::size_t base = begin_[x.mode];
  for (int k = 0; k < st.size; ++k) v += st.weight[k] * values[base + st.index[k]];
  return v;
}

double Grid::mass(std::span<const double> values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) s += values[i] * weights_[i];
  return s;
}

double BoundaryGrid::total_weight() const {
  double s = 0.0;
  for (const auto& c : cells) s += c.weight;
  return s;
}

double BoundaryGrid::mass(std::span<const double> values) const {
  double s = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) s += values[i] * cells[i].weight;
  return s;
}

std::optional<std::size_t> BoundaryGrid::find_face(const StatePoint& x) const {
  std::optional<std::size_t> best;
  double best_d = kInf;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (faces[f].mode != x.mode) continue;
    const double d = std::abs(x.coords[faces[f].axis] - faces[f].level);
    if (d < best_d) {
      best_d = d;
      best = f;
    }
  }
  if (best && best_d <= 1e-8 * (1.0 + std::abs(faces[*best].level))) return best;
  return std::nullopt;
}

double BoundaryGrid::interpolate(std::span<const double> values,
                                 const StatePoint& x) const {
  const auto f = find_face(x);
  if (!f) return 0.0;
  const Face& face = faces[*f];
  Stencil st;
  if (!make_stencil(face.axes, face.strides, x.coords, st)) return 0.0;
  double v = 0.0;
  for (int k = 0; k < st.size; ++k)
    v += st.weight[k] * values[face.first + st.index[k]];
  return v;
}

StateSpace::StateSpace(std::vector<Mode> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) fail(ErrorCode::Config, "model declares no modes");
  grid_ = Grid(modes_);
  build_faces();
}

void StateSpace::check(const StatePoint& x) const {
  if (x.mode >= modes_.size())
    fail(ErrorCode::InvalidArgument, "undeclared mode " + std::to_string(x.mode));
  if (x.coords.size() != modes_[x.mode].axes.size())
    fail(ErrorCode::InvalidArgument, "coordinate dimension does not match mode");
}

StatePoint StateSpace::flow_point(const StatePoint& x, double t) const {
  StatePoint y = x;
  const auto& axes = modes_[x.mode].axes;
  for (std::size_t a = 0; a < axes.size(); ++a)
    if (axes[a].moves()) y.coords[a] = axes[a].flow->advance(t, x.coords[a]);
  return y;
}

double StateSpace::jacobian(const StatePoint& x, double t) const {
  double j = 1.0;
  const auto& axes = modes_[x.mode].axes;
  for (std::size_t a = 0; a < axes.size(); ++a)
    if (axes[a].moves()) j *= axes[a].flow->jacobian(t, x.coords[a]);
  return j;
}

Hit StateSpace::face_hit(const StatePoint& x, int direction) const {
  Hit best;
  const auto& axes = modes_[x.mode].axes;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const Axis& ax = axes[a];
    if (!ax.moves()) continue;
    const double v = ax.velocity(x.coords[a]) * direction;
    double t = kInf;
    bool hi = false;
    if (v > 0.0 && ax.hi_edge == Edge::Face) {
      t = ax.flow->time_to_reach(x.coords[a], ax.hi, direction);
      hi = true;
    } else if (v < 0.0 && ax.lo_edge == Edge::Face) {
      t = ax.flow->time_to_reach(x.coords[a], ax.lo, direction);
    }
    if (t < best.time) best = Hit{t, a, hi};
  }
  return best;
}

double StateSpace::chart_exit_time(const StatePoint& x, int direction) const {
  double best = kInf;
  const auto& axes = modes_[x.mode].axes;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const Axis& ax = axes[a];
    if (!ax.moves()) continue;
    const double v = ax.velocity(x.coords[a]) * direction;
    if (v > 0.0 && ax.hi_edge == Edge::Open && std::isfinite(ax.hi))
      best = std::min(best, ax.flow->time_to_reach(x.coords[a], ax.hi, direction));
    else if (v < 0.0 && ax.lo_edge == Edge::Open && std::isfinite(ax.lo))
      best = std::min(best, ax.flow->time_to_reach(x.coords[a], ax.lo, direction));
  }
  return best;
}

double StateSpace::window_exit_time(const StatePoint& x, int direction) const {
  double best = kInf;
  const auto& axes = modes_[x.mode].axes;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const Axis& ax = axes[a];
    if (ax.is_point) continue;
    const double c = x.coords[a];
    if (c < ax.win_lo || c > ax.win_hi) return 0.0;
    if (!ax.moves()) continue;
    const double v = ax.velocity(c) * direction;
    if (v > 0.0)
      best = std::min(best, ax.flow->time_to_reach(c, ax.win_hi, direction));
    else if (v < 0.0)
      best = std::min(best, ax.flow->time_to_reach(c, ax.win_lo, direction));
  }
  return best;
}

Advanced StateSpace::advance(const StatePoint& x, double t) const {
  check(x);
  if (!std::isfinite(t)) fail(ErrorCode::InvalidArgument, "non-finite time");
  if (t == 0.0) return Advanced{x, FlowStatus::Interior, 0.0};
  const int dir = t > 0.0 ? 1 : -1;
  const double span = std::abs(t);
  const Hit hit = face_hit(x, dir);
  const double exit = chart_exit_time(x, dir);
  if (hit.time <= span && hit.time <= exit) {
    Advanced r{flow_point(x, dir * hit.time), FlowStatus::Boundary, dir * hit.time};
    const Axis& ax = modes_[x.mode].axes[hit.axis];
    r.point.coords[hit.axis] = hit.at_hi ? ax.hi : ax.lo;
    return r;
  }
  if (exit <= span)
    return Advanced{flow_point(x, dir * exit), FlowStatus::OutOfDomain, dir * exit};
  return Advanced{flow_point(x, t), FlowStatus::Interior, t};
}

bool StateSpace::on_plus(const StatePoint& x) const {
  return face_hit(x, 1).time == 0.0;
}

bool StateSpace::on_minus(const StatePoint& x) const {
  return face_hit(x, -1).time == 0.0;
}

bool StateSpace::in_domain(const StatePoint& x) const {
  if (x.mode >= modes_.size() || x.coords.size() != modes_[x.mode].axes.size())
    return false;
  const auto& axes = modes_[x.mode].axes;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (axes[a].is_point) continue;
    const double c = x.coords[a];
    if (!(c >= axes[a].lo && c <= axes[a].hi)) return false;
  }
  return true;
}

void StateSpace::build_faces() {
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    const auto& axes = modes_[m].axes;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const Axis& ax = axes[a];
      if (!ax.moves()) continue;
      for (bool at_hi : {false, true}) {
        if ((at_hi ? ax.hi_edge : ax.lo_edge) != Edge::Face) continue;
        const double level = at_hi ? ax.hi : ax.lo;
        const double b = ax.velocity(level);
        if (b == 0.0) continue;
        const bool outgoing = (b > 0.0) == at_hi;
        BoundaryGrid& side = outgoing ? plus_ : minus_;
        Face face;
        face.mode = m;
        face.axis = a;
        face.at_hi = at_hi;
        face.level = level;
        face.first = side.cells.size();
        face.axes = axes;
        face.axes[a] = Axis::point(ax.name, level);
        face.strides = row_major_strides(face.axes);
        face.count = box_size(face.axes);
        for (std::size_t c = 0; c < face.count; ++c) {
          BoundaryCell cell;
          cell.face = side.faces.size();
          cell.point.mode = m;
          cell.point.coords.resize(axes.size());
          cell.weight = std::abs(b);
          std::vector<std::size_t> multi(axes.size());
          for (std::size_t k = 0; k < axes.size(); ++k) {
            multi[k] = (c / face.strides[k]) % face.axes[k].size();
            cell.point.coords[k] = face.axes[k].center(multi[k]);
            if (k != a) cell.weight *= face.axes[k].measure(multi[k]);
          }
          for (std::size_t i = 0; i < ax.cells; ++i) {
            multi[a] = at_hi ? ax.cells - 1 - i : i;
            cell.line.push_back(grid_.index(m, multi));
          }
          side.cells.push_back(std::move(cell));
        }
        side.faces.push_back(std::move(face));
      }
    }
  }
  // An orbit can also leave through an open edge of the chart in finite time.
  for (auto& c : plus_.cells)
    c.lifetime = std::min(hitting_time(c.point, -1), chart_exit_time(c.point, -1));
  for (auto& c : minus_.cells)
    c.lifetime = std::min(hitting_time(c.point, 1), chart_exit_time(c.point, 1));
}

}  // namespace pdmp
