#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdmp/rng.hpp"
#include "pdmp/state_space.hpp"

namespace pdmp {

using Values = std::vector<double>;
using ValueView = std::span<const double>;

// Jump kernel split into the part landing in the interior (P0) and the part
// landing on the incoming boundary (P_partial). Both density maps take the
// pair (rate * f on the interior grid, f+ on the outgoing grid).
struct JumpLaw {
  // Post-jump state; nullopt sends the process to the dead state.
  std::function<std::optional<StatePoint>(const StatePoint&, Rng&)> sample;
  std::function<Values(ValueView, ValueView)> p0;
  std::function<Values(ValueView, ValueView)> p_partial;
};

struct PdmpModel {
  std::string name;
  std::shared_ptr<const StateSpace> space;
  std::function<double(const StatePoint&)> rate;
  // Optional closed form of the hazard along the forward orbit.
  std::function<double(const StatePoint&, double)> cumulative_hazard;
  bool zero_rate = false;
  JumpLaw jump;

  const Grid& grid() const { return space->grid(); }
  const BoundaryGrid& plus() const { return space->plus(); }
  const BoundaryGrid& minus() const { return space->minus(); }
};

using ModelPtr = std::shared_ptr<const PdmpModel>;

void validate(const PdmpModel& model);

struct GridDensity {
  Values values;
  double total_mass = 0.0;

  static GridDensity from_values(const Grid& grid, Values values);
};

struct DensityPair {
  GridDensity interior;
  Values boundary;  // density per m- on the incoming grid

  double norm(const PdmpModel& model) const;
  static DensityPair make(const PdmpModel& model, Values interior, Values boundary);
};

enum class Direction { Forward = 1, Backward = -1 };

Advanced advance(const PdmpModel& model, const StatePoint& x, double t);
double cocycle(const PdmpModel& model, const StatePoint& x, double t);
double hitting_time(const PdmpModel& model, const StatePoint& x, Direction dir);
// Integral of the rate along the forward orbit over [0, t].
double hazard_integral(const PdmpModel& model, const StatePoint& x, double t);
// Integral of the rate along the backward orbit over [0, t].
double backward_hazard(const PdmpModel& model, const StatePoint& x, double t);

GridDensity sample_density(const PdmpModel& model,
                           const std::function<double(const StatePoint&)>& f);
Values sample_boundary(const BoundaryGrid& side,
                       const std::function<double(const StatePoint&)>& f);
Values rate_times(const PdmpModel& model, ValueView f);
double l1_distance(const Grid& grid, ValueView a, ValueView b);
double pair_distance(const PdmpModel& model, const DensityPair& a,
                     const DensityPair& b);

}  // namespace pdmp
