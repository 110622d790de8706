#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pdmp/core_model.hpp"

namespace pdmp {

// M1: x' = 1 on (0,1); hitting 1 restarts uniformly. An optional constant
// rate adds uniform restarts from the interior.
ModelPtr build_drift_redistribute(std::size_t cells = 200, double rate = 0.0);
// M2: x' = speed on the real line, window [win_lo, win_hi]. A positive rate
// kills the process.
ModelPtr build_free_flow(double win_lo = -1.0, double win_hi = 4.0,
                         std::size_t cells = 200, double speed = 1.0,
                         double rate = 0.0);
// M3: frozen state on (0,1), rate q, jumps to Uniform(0,1).
ModelPtr build_constant_rate(double q = 1.0, std::size_t cells = 200);

struct ScalarLaw {
  enum class Kind { Constant, Linear, Power };
  Kind kind = Kind::Constant;
  double coef = 1.0;
  double power = 1.0;  // Power: coef * x^power

  double operator()(double x) const;
  static ScalarLaw parse(const std::string& kind, double coef, double power = 1.0);
};

struct CellCycleParams {
  ScalarLaw growth{};  // g
  ScalarLaw entry{};   // phi, rate of leaving phase I
  double t2 = 1.0;     // phase II duration
  double x_max = 20.0;
  std::size_t size_cells = 1000;
  std::size_t phase2_cells = 50;
  double flow_step = 1e-3;  // RK4 step when g has no closed-form flow

  double g(double x) const { return growth(x); }
  double phi(double x) const { return entry(x); }
  // Q(x) = int phi/g, up to an additive constant.
  double Q(double x) const;
  // Size at the end of a phase of duration t, run backwards.
  double back(double x, double t) const;
  double newborn(double x) const { return back(2.0 * x, t2); }
  double newborn_slope(double x) const;
  double size_width() const { return x_max / static_cast<double>(size_cells); }
  void validate() const;
};

ModelPtr build_cell_cycle(const CellCycleParams& p);

struct KineticSlabParams {
  enum class Reflection { Specular, Diffuse, Custom };
  double length = 1.0;
  std::vector<double> velocities{1.0, -1.0};
  std::vector<double> weights{1.0, 1.0};
  double collision = 0.0;  // isotropic scattering frequency
  Reflection reflection = Reflection::Specular;
  // Custom: transfer[i][j] = mass fraction from outgoing cell i to incoming
  // cell j (atlas order).
  std::vector<std::vector<double>> transfer;
  std::size_t cells = 200;
};

ModelPtr build_kinetic_slab(const KineticSlabParams& p);

// Operator on phase-I size densities: one generation of the jump chain.
Values p1_apply(const CellCycleParams& p, ValueView f1);

struct P1Invariant {
  Values f1;
  std::size_t iterations = 0;
  double increment = 0.0;
  double residual = 0.0;       // |P1 f1 - f1|_1
  double mass_defect = 0.0;    // |int P1 f1 - int f1|
  double unique_value = 0.0;   // min over the grid tail of Q(newborn(x)) - Q(x)
  bool converged = false;
};

P1Invariant p1_invariant(const CellCycleParams& p, double tol, std::size_t max_iters);
double uniqueness_value(const CellCycleParams& p);

// E_z(T_I): mean sojourn in phase I when entering it at size z.
double mean_phase_one(const CellCycleParams& p, double z);

struct CellCycleLift {
  GridDensity f_bar;        // unnormalized, on the cell-cycle model grid
  Values mean_ti;           // E_z(T_I) at size-cell centers
  double mass = 0.0;        // int (E_z(T_I) + T_II) f1(z) dz
  bool integrable = true;
  double tail_share = 0.0;  // share of that mass carried by the last tenth of the grid
};

CellCycleLift cell_cycle_lift(const CellCycleParams& p, const PdmpModel& model,
                              ValueView f1);

}  // namespace pdmp
