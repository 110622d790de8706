#pragma once

#include <vector>

#include "pdmp/core_model.hpp"

namespace pdmp {

struct R0Options {
  double quad_step = 0.0;   // 0: half the fastest cell crossing time
  double max_time = 1e3;    // backward horizon before a cell is declared divergent
  bool rate_cells_only = false;  // skip interior cells with zero rate (enough for K)
};

struct R0Result {
  Values interior;  // R0 at interior cell centers
  Values outflux;   // its trace on the outgoing grid
  std::vector<std::size_t> divergent;
};

double default_quad_step(const PdmpModel& model);

R0Result apply_R0(const PdmpModel& model, const DensityPair& pair, double lambda,
                  const R0Options& opts = {});
DensityPair apply_K(const PdmpModel& model, const DensityPair& pair, double lambda,
                    const R0Options& opts = {});

struct KInvariant {
  DensityPair pair;
  std::size_t iterations = 0;
  double increment = 0.0;
  double residual = 0.0;    // |K p - p|
  double mass_ratio = 0.0;  // |K p| / |p|
};

// Power iteration on K^period, normalized each sweep; period 2 handles kernels
// that alternate between the interior and the incoming boundary.
KInvariant invariant_of_K(const PdmpModel& model, const DensityPair& init, double tol,
                          std::size_t max_iters, std::size_t period = 1,
                          const R0Options& opts = {});

struct Lift {
  GridDensity f_star;
  double c = 0.0;
};

Lift lift_invariant(const PdmpModel& model, const DensityPair& pair, const R0Options& opts = {});
DensityPair project_invariant(const PdmpModel& model, const GridDensity& f_star);
double k_stochasticity_defect(const PdmpModel& model, const DensityPair& pair,
                              const R0Options& opts = {});

DensityPair uniform_pair(const PdmpModel& model, double interior_share = 1.0);

}  // namespace pdmp
