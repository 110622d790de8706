#pragma once

#include <vector>

#include "pdmp/core_model.hpp"
#include "pdmp/embedded_chain.hpp"

namespace pdmp {

// Polynomial extrapolation along the orbit; values per m+ (resp. m-).
Values trace_plus(const PdmpModel& model, ValueView f);
Values trace_minus(const PdmpModel& model, ValueView f);

struct JumpTerms {
  GridDensity gain;  // B f
  Values influx;     // Psi f, density per m-
};

JumpTerms jump_terms(const PdmpModel& model, const GridDensity& f);

// Precomputed free transport over one step dt: conservative remap of every
// cell along each moving axis, followed by the survival factor.
class TransportPlan {
 public:
  TransportPlan(const PdmpModel& model, double dt);

  struct Outcome {
    Values values;
    Values outflux_mass;  // mass that reached each outgoing cell
    Values hazard_loss;   // mass removed by the rate in each interior cell
    double off_grid = 0.0;
  };

  Outcome apply(ValueView f) const;
  // Adds the mass fed through the incoming boundary during one step.
  void inject(Values& f, ValueView influx) const;
  double dt() const { return dt_; }

 private:
  struct AxisRemap {
    std::size_t mode = 0;
    std::size_t axis = 0;
    std::vector<double> src;      // backward images of the cell edges
    long lo_face = -1;            // outgoing face at the low edge
    long hi_face = -1;
  };
  struct Feed {
    std::size_t cell;
    double fraction;
  };

  const PdmpModel& model_;
  double dt_;
  std::vector<AxisRemap> remaps_;
  Values survival_;
  std::vector<std::vector<Feed>> feeds_;
};

GridDensity transport_step(const PdmpModel& model, const GridDensity& f, double dt);

struct EvolveResult {
  GridDensity density;
  double off_grid_mass = 0.0;  // carried out of the grid window
  std::size_t steps = 0;
  bool cfl_warning = false;    // dt above half the fastest cell crossing time
};

EvolveResult evolve(const PdmpModel& model, const GridDensity& f0, double t, double dt);

struct ResolventResult {
  GridDensity density;
  std::vector<double> term_masses;
  bool converged = false;
};

ResolventResult resolvent_G(const PdmpModel& model, const GridDensity& f, double lambda, double tol,
                            std::size_t max_terms, const R0Options& opts = {});

}  // namespace pdmp
