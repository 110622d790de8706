// Acceptance suite. One line per criterion; exit status 1 if any fails.
// A criterion also fails when it overruns its time budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "pdmp/embedded_chain.hpp"
#include "pdmp/models.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/semigroup.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/verification.hpp"

using namespace pdmp;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
};

void Verdict::require(bool ok, const char* fmt, ...) {
  char buf[256];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  if (!detail.empty()) detail += "; ";
  detail += buf;
  if (!ok) {
    detail += " [x]";
    pass = false;
  }
}

int failures = 0;

void criterion(int id, const char* name, double budget, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.require(false, "threw: %s", e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < budget, "%.1fs of %.0fs", secs, budget);
  if (!v.pass) ++failures;
  std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
  std::fflush(stdout);
}

GridDensity on(const PdmpModel& m, const std::function<double(double)>& f) {
  return sample_density(m, [&f](const StatePoint& p) { return f(p.coords[0]); });
}

// Exact cell averages of a 1D density given its antiderivative.
Values averages(const PdmpModel& m, const std::function<double(double)>& F) {
  const Axis& a = m.space->modes()[0].axes[0];
  Values v(a.cells);
  for (std::size_t i = 0; i < a.cells; ++i) v[i] = (F(a.edge(i + 1)) - F(a.edge(i))) / a.width();
  return v;
}

CellCycleParams toy() {
  CellCycleParams p;
  p.growth = ScalarLaw::parse("constant", 1.0);
  p.entry = ScalarLaw::parse("constant", 1.0);
  p.t2 = 1.0;
  return p;
}

KineticSlabParams slab(std::size_t cells) {
  KineticSlabParams k;
  k.cells = cells;
  k.collision = 1.0;
  return k;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);

  criterion(1, "flow, cocycle and hazard laws", 5.0, [](Verdict& v) {
    CellCycleParams sq = toy();
    sq.growth = ScalarLaw::parse("power", 1.0, 0.5);
    sq.entry = ScalarLaw::parse("linear", 1.0);
    sq.size_cells = 200;
    const std::vector<ModelPtr> models{build_drift_redistribute(), build_free_flow(-1.0, 4.0, 200, 1.0, 0.5),
                                       build_constant_rate(1.0), build_cell_cycle(toy()), build_cell_cycle(sq),
                                       build_kinetic_slab(slab(200))};
    const char* names[] = {"M1", "M2", "M3", "M4", "M4sqrt", "M5"};
    for (std::size_t k = 0; k < models.size(); ++k) {
      auto r = law_suite(*models[k], 1000, 11 + k);
      v.require(r.samples == 1000 && r.passed(), "%s max %.1e (tol %.0e)", names[k],
                std::max({r.group, r.cocycle, r.hazard}), r.tolerance);
    }
  });

  criterion(2, "change of variables", 5.0, [](Verdict& v) {
    auto ex = [](const StatePoint& p) { return std::exp(p.coords[0]); };
    auto evx = [](const StatePoint& p) { return std::exp(p.coords[1] * p.coords[0]); };
    const double m1 = change_of_variables(*build_drift_redistribute(1000), ex).rel_error;
    const double m1c = change_of_variables(*build_drift_redistribute(500), ex).rel_error;
    const double m5 = change_of_variables(*build_kinetic_slab(slab(1000)), evx).rel_error;
    const double m5c = change_of_variables(*build_kinetic_slab(slab(500)), evx).rel_error;
    v.require(m1 < 1e-3, "M1 rel %.2e", m1);
    v.require(m5 < 1e-3, "M5 rel %.2e", m5);
    // At least first order: halving h divides the error by 1.7 or more.
    v.require(m1c / m1 >= 1.7, "M1 refinement ratio %.2f", m1c / m1);
    v.require(m5c / m5 >= 1.7, "M5 refinement ratio %.2f", m5c / m5);
  });

  criterion(3, "Green identity", 5.0, [](Verdict& v) {
    auto m1 = build_drift_redistribute(1000);
    const double q = green_residual(*m1, on(*m1, [](double x) { return x * (1 - x); }).values,
                                    on(*m1, [](double x) { return 2 * x - 1; }).values);
    const double l = green_residual(*m1, on(*m1, [](double x) { return 2 * x; }).values, Values(1000, -2.0));
    auto m5 = build_kinetic_slab(slab(200));
    const std::size_t n5 = m5->grid().size();
    const double u = green_residual(*m5, Values(n5, 1.0), Values(n5, 0.0));
    v.require(q < 1e-6, "x(1-x) %.1e", q);
    v.require(l < 1e-6, "2x %.1e", l);
    v.require(u < 1e-6, "M5 uniform %.1e", u);
    // Refinement on a function with nonvanishing residual.
    auto res = [](std::size_t cells) {
      auto m = build_drift_redistribute(cells);
      return green_residual(*m, on(*m, [](double x) { return std::exp(x); }).values,
                            on(*m, [](double x) { return -std::exp(x); }).values);
    };
    const double ratio = res(500) / res(1000);
    v.require(ratio >= 1.7 && ratio <= 2.3, "e^x halving ratio %.2f (want [1.7, 2.3])", ratio);
  });

  criterion(4, "holding-time law", 10.0, [](Verdict& v) {
    const double q = 1.0;
    auto m3 = build_constant_rate(q);
    const std::size_t n = 100000;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = Rng::stream(4, i);
      s[i] = sample_holding(*m3, StatePoint{{0.5}, 0}, rng).time;
    }
    std::sort(s.begin(), s.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double F = 1.0 - std::exp(-q * s[i]);
      ks = std::max({ks, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
    }
    v.require(ks < 0.01, "M3 KS %.4f", ks);
    auto m1 = build_drift_redistribute();
    double worst = 0.0;
    bool boundary = true;
    Rng pick(5);
    for (int k = 0; k < 1000; ++k) {
      const double x = pick.uniform();
      Rng rng = Rng::stream(6, k);
      auto h = sample_holding(*m1, StatePoint{{x}, 0}, rng);
      boundary = boundary && h.cause == HoldingCause::BoundaryHit;
      worst = std::max(worst, std::abs(h.time - (1.0 - x)));
    }
    v.require(boundary && worst < 1e-12, "M1 hit time error %.1e", worst);
  });

  criterion(5, "embedded-chain fixed point and lift", 5.0, [](Verdict& v) {
    auto m1 = build_drift_redistribute();
    const Grid& g = m1->grid();
    auto inv = invariant_of_K(*m1, uniform_pair(*m1, 0.5), 1e-13, 1000);
    double dev = 0.0;
    for (double x : inv.pair.interior.values) dev = std::max(dev, std::abs(x - 1.0));
    for (double x : inv.pair.boundary) dev = std::max(dev, std::abs(x));
    v.require(dev < 1e-10, "K fixed point off (uniform, 0) by %.1e", dev);
    auto lift = lift_invariant(*m1, inv.pair);
    // Stationary equation on (0,1): f' = f(1) with f(0) = 0, so f = 2x once
    // normalized. Compared through exact cell averages.
    const Values oracle = averages(*m1, [](double x) { return x * x; });
    const double l1 = l1_distance(g, lift.f_star.values, oracle);
    v.require(l1 < 1e-3, "lift vs stationary ODE L1 %.1e", l1);
    const double rt = pair_distance(*m1, project_invariant(*m1, lift.f_star), inv.pair);
    v.require(rt < 1e-4, "round trip %.1e", rt);
  });

  criterion(6, "stationarity under evolve", 30.0, [](Verdict& v) {
    auto m1 = build_drift_redistribute();
    const Grid& g = m1->grid();
    auto lift = lift_invariant(*m1, invariant_of_K(*m1, uniform_pair(*m1, 0.5), 1e-13, 1000).pair);
    const double drift = l1_distance(g, evolve(*m1, lift.f_star, 1.0, 1e-3).density.values, lift.f_star.values);
    v.require(drift < 1e-2, "|evolve(f*, 1) - f*| %.1e", drift);
    auto uni = on(*m1, [](double) { return 1.0; });
    const double gap = l1_distance(g, evolve(*m1, uni, 20.0, 1e-3).density.values, lift.f_star.values);
    v.require(gap < 2e-2, "uniform at t=20 vs f* %.1e", gap);
  });

  criterion(7, "Monte Carlo against the PDE", 60.0, [](Verdict& v) {
    auto m1 = build_drift_redistribute();
    auto r1 = mc_vs_pde(*m1, on(*m1, [](double) { return 1.0; }), 1.0, 100000, 7, 1e-3);
    v.require(r1.l1 <= 0.05, "M1 t=1 L1 %.4f over %zu blocks", r1.l1, r1.blocks);
    v.require(r1.mass_gap < 1e-3, "M1 mass gap %.1e", r1.mass_gap);
    auto m4 = build_cell_cycle(toy());
    auto f0 = sample_density(*m4, [](const StatePoint& p) {
      return p.mode == 0 ? p.coords[0] * p.coords[0] * std::exp(-2.0 * p.coords[0]) : 0.0;
    });
    for (double& x : f0.values) x /= f0.total_mass;
    f0 = GridDensity::from_values(m4->grid(), f0.values);
    auto r4 = mc_vs_pde(*m4, f0, 2.0, 100000, 8, 2e-3, {10, 50});
    v.require(r4.l1 <= 0.07, "toy cell cycle t=2 L1 %.4f over %zu blocks", r4.l1, r4.blocks);
    v.require(r4.mass_gap < 1e-3, "M4 mass gap %.1e", r4.mass_gap);
  });

  criterion(8, "Duhamel oracle against evolve", 30.0, [](Verdict& v) {
    auto m1 = build_drift_redistribute(1000);
    auto uni = on(*m1, [](double) { return 1.0; });
    DuhamelOptions o;
    o.tail_paths = 100000;
    auto d = duhamel_oracle(*m1, uni, 0.3, o);
    const double l1 = l1_distance(m1->grid(), d.density.values, evolve(*m1, uni, 0.3, 1e-3).density.values);
    v.require(l1 <= 5e-3 + d.tail, "L1 %.2e, bound 5e-3 + tail %.2e", l1, d.tail);
    v.require(std::abs(d.term_masses[0] - 0.7) < 1e-9, "no-jump mass %.6f", d.term_masses[0]);
  });

  criterion(9, "resolvent", 60.0, [](Verdict& v) {
    auto m1 = build_drift_redistribute();
    auto uni = on(*m1, [](double) { return 1.0; });
    KineticSlabParams diffuse = slab(200);
    diffuse.reflection = KineticSlabParams::Reflection::Diffuse;
    const std::vector<ModelPtr> models{m1, build_constant_rate(1.0), build_free_flow(-1.0, 4.0, 200, 1.0, 0.5),
                                       build_kinetic_slab(diffuse)};
    double worst = 0.0;
    for (const auto& m : models) {
      auto f = sample_density(*m, [](const StatePoint& p) { return 1.0 + p.coords[0] * p.coords[0]; });
      for (double lambda : {0.1, 1.0, 10.0})
        worst = std::max(worst, lambda * resolvent_G(*m, f, lambda, 1e-12, 100000).density.total_mass / f.total_mass);
    }
    // The grid quadrature carries the same 1e-4 allowance as the equality.
    v.require(worst <= 1.0 + 1e-4, "max lambda|Rf|/|f| %.7f", worst);
    const double one = resolvent_G(*m1, uni, 1.0, 1e-12, 100000).density.total_mass;
    v.require(std::abs(one - 1.0) <= 1e-4, "M1 lambda|Rf| %.7f", one);
    auto d = resolvent_duality(*m1, uni, [](const StatePoint& p) { return p.coords[0]; }, 1.0, 100000, 9);
    v.require(std::abs(d.resolvent_side - d.path_side) <= 3 * d.path_se, "duality %.5f vs %.5f (se %.1e)",
              d.resolvent_side, d.path_side, d.path_se);
    auto big = resolvent_G(*m1, uni, 1e3, 1e-14, 1000);
    Values scaled = big.density.values;
    for (double& x : scaled) x *= 1e3;
    const double lim = l1_distance(m1->grid(), scaled, uni.values);
    v.require(lim < 1e-2, "|1000 R(1000) f - f| %.1e", lim);
  });

  criterion(10, "cell cycle", 60.0, [](Verdict& v) {
    const CellCycleParams p = toy();
    auto m4 = build_cell_cycle(p);
    const Grid& g = m4->grid();
    auto pi = p1_invariant(p, 1e-12, 1000);
    v.require(pi.converged && pi.mass_defect < 1e-8, "P1 mass defect %.1e", pi.mass_defect);
    v.require(pi.unique_value > 1.0, "uniqueness value %.3f", pi.unique_value);
    auto inv = invariant_of_K(*m4, uniform_pair(*m4, 0.5), 1e-9, 1000, 2);
    double fm = 0.0;
    for (std::size_t c = g.mode_begin(0); c < g.mode_end(0); ++c) fm += inv.pair.interior.values[c] * g.weight(c);
    double agree = 0.0;
    for (std::size_t k = 0; k < p.size_cells; ++k)
      agree += std::abs(inv.pair.interior.values[g.mode_begin(0) + k] / fm - pi.f1[k]) * p.size_width();
    v.require(agree < 1e-3, "P1 vs K route L1 %.1e", agree);
    double f1_mass = 0.0;
    for (double x : pi.f1) f1_mass += x * p.size_width();
    auto lift = cell_cycle_lift(p, *m4, pi.f1);
    v.require(std::abs(lift.mass - 2.0 * f1_mass) < 1e-6, "lift mass %.9f vs 2|f1| %.9f", lift.mass, 2.0 * f1_mass);
    Values fb = lift.f_bar.values;
    for (double& x : fb) x /= lift.f_bar.total_mass;
    auto fbar = GridDensity::from_values(g, fb);
    const double drift = l1_distance(g, evolve(*m4, fbar, 1.0, 1e-2).density.values, fb);
    v.require(drift < 2e-2, "evolve drift of the lift %.1e", drift);
  });

  criterion(11, "K stochasticity defect", 5.0, [](Verdict& v) {
    auto m1 = build_drift_redistribute();
    auto m3 = build_constant_rate(1.0);
    auto m2 = build_free_flow();
    const double d1 = k_stochasticity_defect(*m1, uniform_pair(*m1));
    const double d3 = k_stochasticity_defect(*m3, uniform_pair(*m3));
    const double d2 = k_stochasticity_defect(*m2, uniform_pair(*m2));
    v.require(std::abs(d1) < 1e-6, "M1 %.1e", d1);
    v.require(std::abs(d3) < 1e-6, "M3 %.1e", d3);
    v.require(d2 == 1.0, "M2 %.17g", d2);
  });

  criterion(12, "determinism across thread counts", 30.0, [](Verdict& v) {
    const std::filesystem::path root =
        std::filesystem::temp_directory_path() / ("pdmp_acceptance_" + std::to_string(::getpid()));
    std::filesystem::remove_all(root);
    for (const char* model : {"drift_redistribute", "cell_cycle"}) {
      std::vector<std::string> outputs;
      for (const char* threads : {"1", "4", "4"}) {
        const auto dir = root / (std::string(model) + "_" + threads + "_" + std::to_string(outputs.size()));
        const std::string cmd = std::string("PDMP_THREADS=") + threads + " \"" + PDMP_CLI + "\" run \"" +
                                PDMP_CONFIGS + "/" + model + ".json\" simulate --paths 100000 --seed 7 -q --out \"" +
                                dir.string() + "\"";
        const int rc = std::system(cmd.c_str());
        v.require(rc == 0, "%s threads=%s exit %d", model, threads, rc);
        outputs.push_back(slurp(dir / "density.csv"));
      }
      const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[1] == outputs[2];
      v.require(same, "%s density.csv identical (%zu bytes)", model, outputs[0].size());
    }
    std::filesystem::remove_all(root);
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
