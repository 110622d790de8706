#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pdmp/core_model.hpp"
#include "pdmp/simulator.hpp"

namespace pdmp {

using PointFn = std::function<double(const StatePoint&)>;

// Largest relative errors of the group law, the cocycle law and hazard
// additivity over random (x, t, s) triples.
struct LawReport {
  std::size_t samples = 0;
  double group = 0.0;
  double cocycle = 0.0;
  double hazard = 0.0;
  double tolerance = 1e-9;  // 1e-6 when some axis is integrated numerically

  bool passed() const { return group < tolerance && cocycle < tolerance && hazard < 1e-8; }
};

LawReport law_suite(const PdmpModel& model, std::size_t samples, std::uint64_t seed);

// Integral of f over the cells that reach the outgoing boundary, once on the
// interior grid and once along the flow lines ending on it.
struct CovReport {
  double interior = 0.0;
  double boundary = 0.0;
  double rel_error = 0.0;
};

CovReport change_of_variables(const PdmpModel& model, const PointFn& f);

// |int T f dm - int trace_minus f dm- + int trace_plus f dm+|, with T f given
// on the grid by the caller.
double green_residual(const PdmpModel& model, ValueView f, ValueView transport_of_f);

struct DuhamelOptions {
  std::size_t n_max = 2;
  std::size_t time_nodes = 200;
  double tail_threshold = 1e-2;
  std::size_t tail_paths = 100000;
  std::uint64_t seed = 1;
};

struct DuhamelResult {
  GridDensity density;
  std::vector<double> term_masses;  // mass with exactly n jumps, n = 0..n_max
  double tail = 0.0;                // simulated P(at least n_max + 1 jumps)
};

// Sum of the 0..n_max jump contributions at time t. Refuses (Tolerance) when
// the simulated tail exceeds the threshold.
DuhamelResult duhamel_oracle(const PdmpModel& model, const GridDensity& f0, double t,
                             const DuhamelOptions& opts = {});

// Block sums of cell masses. factors[a] merges that many cells along axis a
// of every mode; point axes are ignored. The result holds masses, not
// densities.
Values coarsen_masses(const PdmpModel& model, ValueView values,
                      const std::vector<std::size_t>& factors);

struct McVsPde {
  double l1 = 0.0;        // on the coarse blocks
  double mass_gap = 0.0;  // |MC lost fraction - PDE mass defect|
  double mc_lost = 0.0;
  double pde_defect = 0.0;
  std::size_t blocks = 0;
};

McVsPde mc_vs_pde(const PdmpModel& model, const GridDensity& init, double t, std::size_t n_paths,
                  std::uint64_t seed, double dt, const std::vector<std::size_t>& factors = {});

struct Duality {
  double resolvent_side = 0.0;  // <R(lambda) f, psi> on the grid
  double path_side = 0.0;       // Monte Carlo <f, U_lambda psi>
  double path_se = 0.0;
  double scaled_mass = 0.0;     // lambda |R(lambda) f|
};

Duality resolvent_duality(const PdmpModel& model, const GridDensity& f, const PointFn& psi,
                          double lambda, std::size_t n_paths, std::uint64_t seed);

}  // namespace pdmp
