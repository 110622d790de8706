#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pdmp/core_model.hpp"

namespace pdmp {

enum class HoldingCause { RateJump, BoundaryHit, Never, ChartExit };

struct Holding {
  double time = kInf;
  HoldingCause cause = HoldingCause::Never;
};

struct SimOptions {
  std::size_t max_jumps = 100000;
  double hazard_horizon = 1e6;  // give up searching for a rate jump beyond this time
  bool record = true;           // keep the event list
};

Holding sample_holding(const PdmpModel& model, const StatePoint& x, Rng& rng,
                       const SimOptions& opts = {});

enum class EventCause { RateJump, BoundaryJump, Horizon, Censored };

struct PathEvent {
  double time = 0.0;
  EventCause cause = EventCause::Horizon;
  StatePoint pre;
  std::optional<StatePoint> post;  // nullopt: dead state
};

// One holding time plus the jump it ends with. The event time is relative to
// the start state; a process that never jumps yields a Horizon event at kInf.
PathEvent step(const PdmpModel& model, const StatePoint& x, Rng& rng,
               const SimOptions& opts = {});

struct Path {
  StatePoint initial;
  std::vector<PathEvent> events;
  std::optional<StatePoint> final_state;  // nullopt when censored or dead
  std::size_t jump_count = 0;
  bool censored = false;
  bool absorbed = false;
};

Path simulate_path(const PdmpModel& model, const StatePoint& x0, double horizon, Rng& rng,
                   const SimOptions& opts = {});

// Initial law: a point mass or a grid density (uniform inside each cell).
struct InitialLaw {
  std::optional<StatePoint> point;
  Values density;

  static InitialLaw at(StatePoint x) { return InitialLaw{std::move(x), {}}; }
  static InitialLaw from(const GridDensity& d) { return InitialLaw{std::nullopt, d.values}; }
};

class InitialSampler {
 public:
  InitialSampler(const PdmpModel& model, const InitialLaw& law);
  StatePoint operator()(Rng& rng) const;

 private:
  const Grid& grid_;
  const StateSpace& space_;
  std::optional<StatePoint> point_;
  std::vector<double> cumulative_;
};

struct DensityEstimate {
  GridDensity density;
  double censored_mass = 0.0;  // censored or absorbed fraction
  double absorbed_fraction = 0.0;
  double off_grid_fraction = 0.0;  // alive but outside the grid window
  std::vector<std::uint64_t> counts;
  std::uint64_t total_jumps = 0;
};

DensityEstimate estimate_density(const PdmpModel& model, const InitialLaw& init, double t,
                                 std::size_t n_paths, std::uint64_t seed,
                                 const SimOptions& opts = {});

}  // namespace pdmp
