#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdmp/flow.hpp"

namespace pdmp {

struct StatePoint {
  std::vector<double> coords;
  std::size_t mode = 0;
};

enum class Edge { Open, Face };

// One coordinate of a mode: either an atom (a fixed value carrying a weight,
// e.g. a discrete velocity) or an interval with a grid window and a flow.
struct Axis {
  std::string name;
  bool is_point = false;
  double value = 0.0;
  double weight = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  Edge lo_edge = Edge::Open;
  Edge hi_edge = Edge::Open;
  double win_lo = 0.0;
  double win_hi = 1.0;
  std::size_t cells = 1;
  AxisFlowPtr flow;  // null: frozen coordinate

  static Axis point(std::string name, double value, double weight = 1.0);
  static Axis interval(std::string name, double lo, double hi, Edge lo_edge,
                       Edge hi_edge, double win_lo, double win_hi,
                       std::size_t cells, AxisFlowPtr flow);

  std::size_t size() const { return is_point ? 1 : cells; }
  double width() const { return (win_hi - win_lo) / static_cast<double>(cells); }
  double edge(std::size_t i) const;
  double center(std::size_t i) const;
  double measure(std::size_t) const { return is_point ? weight : width(); }
  double velocity(double x) const { return flow ? flow->velocity(x) : 0.0; }
  bool moves() const { return !is_point && flow != nullptr; }
};

struct Mode {
  std::string name;
  std::vector<Axis> axes;
  bool stationary() const;
};

// Multilinear interpolation weights over a tensor grid of cell centers.
struct Stencil {
  std::array<std::size_t, 8> index{};
  std::array<double, 8> weight{};
  int size = 0;
};

// Clamped to the nearest center between a window edge and the first center;
// returns false outside the window.
bool make_stencil(const std::vector<Axis>& axes,
                  const std::vector<std::size_t>& strides,
                  std::span<const double> coords, Stencil& out);

class Grid {
 public:
  Grid() = default;
  explicit Grid(const std::vector<Mode>& modes);

  std::size_t size() const { return weights_.size(); }
  std::size_t num_modes() const { return begin_.size() - 1; }
  std::size_t mode_begin(std::size_t m) const { return begin_[m]; }
  std::size_t mode_end(std::size_t m) const { return begin_[m + 1]; }
  std::size_t mode_of(std::size_t cell) const;
  std::size_t stride(std::size_t m, std::size_t axis) const {
    return strides_[m][axis];
  }
  const std::vector<std::size_t>& strides(std::size_t m) const {
    return strides_[m];
  }
  std::size_t index(std::size_t m, std::span<const std::size_t> multi) const;
  std::vector<std::size_t> multi_index(std::size_t cell) const;
  StatePoint center(std::size_t cell) const;
  double weight(std::size_t cell) const { return weights_[cell]; }
  const std::vector<double>& weights() const { return weights_; }
  std::optional<std::size_t> locate(const StatePoint& x) const;
  double interpolate(std::span<const double> values, const StatePoint& x) const;
  double mass(std::span<const double> values) const;

 private:
  const std::vector<Mode>* modes_ = nullptr;
  std::vector<std::size_t> begin_{0};
  std::vector<std::vector<std::size_t>> strides_;
  std::vector<double> weights_;
};

enum class Side { Minus, Plus };

// A face of a mode's box where the normal velocity is nonzero.
struct Face {
  std::size_t mode = 0;
  std::size_t axis = 0;
  bool at_hi = false;
  double level = 0.0;
  std::size_t first = 0;
  std::size_t count = 0;
  std::vector<Axis> axes;  // mode axes with the normal axis collapsed
  std::vector<std::size_t> strides;
};

struct BoundaryCell {
  std::size_t face = 0;
  StatePoint point;
  double weight = 0.0;    // m+ or m- measure of the cell
  double lifetime = 0.0;  // t- for outgoing cells, t+ for incoming ones
  std::vector<std::size_t> line;  // interior cells from the face inward
};

class BoundaryGrid {
 public:
  std::size_t size() const { return cells.size(); }
  bool empty() const { return cells.empty(); }
  double weight(std::size_t i) const { return cells[i].weight; }
  double total_weight() const;
  double mass(std::span<const double> values) const;
  std::optional<std::size_t> find_face(const StatePoint& x) const;
  double interpolate(std::span<const double> values, const StatePoint& x) const;

  std::vector<Face> faces;
  std::vector<BoundaryCell> cells;
};

struct Hit {
  double time = kInf;
  std::size_t axis = 0;
  bool at_hi = false;
};

enum class FlowStatus { Interior, Boundary, OutOfDomain };

struct Advanced {
  StatePoint point;
  FlowStatus status = FlowStatus::Interior;
  double time = 0.0;  // signed time actually travelled
};

// Modes, their grids, the boundary atlas and all flow geometry.
class StateSpace {
 public:
  explicit StateSpace(std::vector<Mode> modes);
  StateSpace(const StateSpace&) = delete;
  StateSpace& operator=(const StateSpace&) = delete;

  const std::vector<Mode>& modes() const { return modes_; }
  const Mode& mode(std::size_t m) const { return modes_.at(m); }
  const Grid& grid() const { return grid_; }
  const BoundaryGrid& minus() const { return minus_; }
  const BoundaryGrid& plus() const { return plus_; }

  void check(const StatePoint& x) const;
  StatePoint flow_point(const StatePoint& x, double t) const;
  double jacobian(const StatePoint& x, double t) const;
  Hit face_hit(const StatePoint& x, int direction) const;
  double hitting_time(const StatePoint& x, int direction) const {
    return face_hit(x, direction).time;
  }
  // Time until the orbit leaves the chart through an open finite edge.
  double chart_exit_time(const StatePoint& x, int direction) const;
  // Time until the orbit leaves the grid window.
  double window_exit_time(const StatePoint& x, int direction) const;
  Advanced advance(const StatePoint& x, double t) const;
  bool on_plus(const StatePoint& x) const;
  bool on_minus(const StatePoint& x) const;
  bool in_domain(const StatePoint& x) const;

 private:
  void build_faces();

  std::vector<Mode> modes_;
  Grid grid_;
  BoundaryGrid minus_;
  BoundaryGrid plus_;
};

}  // namespace pdmp
