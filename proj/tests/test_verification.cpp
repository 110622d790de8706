#include <cmath>

#include "doctest.h"
#include "pdmp/error.hpp"
#include "pdmp/models.hpp"
#include "pdmp/semigroup.hpp"
#include "pdmp/verification.hpp"

using namespace pdmp;

namespace {

GridDensity on(const PdmpModel& m, double (*f)(double)) {
  return sample_density(m, [f](const StatePoint& p) { return f(p.coords[0]); });
}

CellCycleParams toy() {
  CellCycleParams p;
  p.growth = ScalarLaw::parse("constant", 1.0);
  p.entry = ScalarLaw::parse("constant", 1.0);
  return p;
}

}  // namespace

TEST_CASE("law suite on every built-in model") {
  CellCycleParams sq;
  sq.growth = ScalarLaw::parse("power", 1.0, 0.5);
  sq.entry = ScalarLaw::parse("linear", 1.0);
  sq.size_cells = 200;
  KineticSlabParams kp;
  kp.collision = 1.0;
  std::vector<ModelPtr> models{build_drift_redistribute(), build_free_flow(), build_constant_rate(2.0),
                               build_cell_cycle(toy()), build_cell_cycle(sq), build_kinetic_slab(kp)};
  for (const auto& m : models) {
    auto r = law_suite(*m, 1000, 5);
    CAPTURE(m->name);
    CHECK(r.samples == 1000);
    CHECK(r.passed());
  }
  CHECK(law_suite(*models[4], 10, 1).tolerance == 1e-6);
}

TEST_CASE("change of variables between the grid and the outgoing boundary") {
  auto ex = [](const StatePoint& p) { return std::exp(p.coords[0]); };
  auto m1 = build_drift_redistribute(1000);
  auto a = change_of_variables(*m1, ex);
  CHECK(a.boundary == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  CHECK(a.rel_error < 1e-3);
  auto coarse = change_of_variables(*build_drift_redistribute(500), ex);
  CHECK(coarse.rel_error / a.rel_error >= 1.7);

  KineticSlabParams kp;
  kp.cells = 1000;
  auto m5 = build_kinetic_slab(kp);
  auto b = change_of_variables(*m5, [](const StatePoint& p) { return std::exp(p.coords[1] * p.coords[0]); });
  CHECK(b.rel_error < 1e-3);

  auto m4 = build_cell_cycle(toy());
  auto c = change_of_variables(*m4, [](const StatePoint& p) {
    return p.mode == 1 ? std::exp(-p.coords[0]) * (1 + p.coords[1]) : 0.0;
  });
  CHECK(c.rel_error < 1e-3);
}

TEST_CASE("Green residual") {
  auto m1 = build_drift_redistribute(1000);
  auto q = on(*m1, [](double x) { return x * (1 - x); });
  auto tq = on(*m1, [](double x) { return 2 * x - 1; });
  CHECK(green_residual(*m1, q.values, tq.values) < 1e-6);
  auto l = on(*m1, [](double x) { return 2 * x; });
  CHECK(green_residual(*m1, l.values, Values(1000, -2.0)) < 1e-6);

  KineticSlabParams kp;
  auto m5 = build_kinetic_slab(kp);
  const std::size_t n = m5->grid().size();
  CHECK(green_residual(*m5, Values(n, 1.0), Values(n, 0.0)) < 1e-6);

  auto m2 = build_free_flow(-1.0, 4.0, 500);
  auto bump = on(*m2, [](double x) { return (x > 0 && x < 1) ? x * x * (1 - x) * (1 - x) : 0.0; });
  auto tb = on(*m2, [](double x) { return (x > 0 && x < 1) ? -2 * x * (1 - x) * (1 - 2 * x) : 0.0; });
  CHECK(green_residual(*m2, bump.values, tb.values) < 1e-12);

  CHECK_THROWS_AS(green_residual(*m1, q.values, Values(3, 0.0)), PdmpError);
}

TEST_CASE("Duhamel oracle") {
  auto m2 = build_free_flow(-1.0, 4.0, 500);
  auto bump = on(*m2, [](double x) { return (x > 0 && x < 1) ? 1.0 : 0.0; });
  DuhamelOptions o0;
  o0.n_max = 0;
  o0.tail_paths = 1000;
  auto d0 = duhamel_oracle(*m2, bump, 0.7, o0);
  CHECK(d0.tail == 0.0);
  CHECK(l1_distance(m2->grid(), d0.density.values, transport_step(*m2, bump, 0.7).values) == 0.0);

  auto m1 = build_drift_redistribute(1000);
  auto uni = on(*m1, [](double) { return 1.0; });
  DuhamelOptions o;
  o.tail_paths = 20000;
  auto d = duhamel_oracle(*m1, uni, 0.3, o);
  REQUIRE(d.term_masses.size() == 3);
  CHECK(d.term_masses[0] == doctest::Approx(0.7).epsilon(1e-9));
  // Exactly one jump: 0.3 minus P(second jump by 0.3) = 0.3 - 0.3^2/2.
  CHECK(d.term_masses[1] == doctest::Approx(0.255).epsilon(1e-3));
  CHECK(d.tail == doctest::Approx(0.0045).epsilon(0.15));
  auto ev = evolve(*m1, uni, 0.3, 1e-3);
  CHECK(l1_distance(m1->grid(), d.density.values, ev.density.values) <= 5e-3 + d.tail);

  o.tail_threshold = 1e-3;
  CHECK_THROWS_AS(duhamel_oracle(*m1, uni, 0.3, o), PdmpError);
  o.n_max = 3;
  CHECK_THROWS_AS(duhamel_oracle(*m1, uni, 0.3, o), PdmpError);
}

TEST_CASE("Duhamel oracle through the incoming boundary") {
  KineticSlabParams kp;
  kp.cells = 400;
  kp.reflection = KineticSlabParams::Reflection::Diffuse;
  auto m5 = build_kinetic_slab(kp);
  auto f = sample_density(*m5, [](const StatePoint& p) {
    const double x = p.coords[0];
    return p.coords[1] > 0 && x > 0.6 ? std::pow(std::sin(2.5 * M_PI * (x - 0.6)), 2) : 0.0;
  });
  DuhamelOptions o;
  o.tail_paths = 20000;
  o.time_nodes = 100;
  auto d = duhamel_oracle(*m5, f, 0.5, o);
  CHECK(d.tail == 0.0);
  CHECK(d.density.total_mass == doctest::Approx(f.total_mass).epsilon(1e-4));
  auto ev = evolve(*m5, f, 0.5, 1.0 / 400);
  CHECK(l1_distance(m5->grid(), d.density.values, ev.density.values) < 5e-3);
}

TEST_CASE("coarse block masses") {
  auto m4 = build_cell_cycle(toy());
  const Grid& g = m4->grid();
  Values v(g.size(), 1.0);
  auto b = coarsen_masses(*m4, v, {10, 50});
  CHECK(b.size() == 200);
  double s = 0.0;
  for (double x : b) s += x;
  CHECK(s == doctest::Approx(g.mass(v)).epsilon(1e-10));
}

TEST_CASE("Monte Carlo against the PDE") {
  auto m2 = build_free_flow();
  auto bump = on(*m2, [](double x) { return (x > 0 && x < 1) ? 6 * x * (1 - x) : 0.0; });
  auto r2 = mc_vs_pde(*m2, bump, 1.0, 100000, 3, 0.025);
  CHECK(r2.l1 <= 0.02);
  CHECK(r2.mass_gap < 1e-9);

  auto m1 = build_drift_redistribute();
  auto fs = on(*m1, [](double x) { return 2 * x; });
  auto r1 = mc_vs_pde(*m1, fs, 1.0, 100000, 7, 1e-3);
  CHECK(r1.blocks == 200);
  CHECK(r1.l1 <= 0.05);
}

TEST_CASE("resolvent duality") {
  auto m1 = build_drift_redistribute();
  auto uni = on(*m1, [](double) { return 1.0; });
  auto one = resolvent_duality(*m1, uni, [](const StatePoint&) { return 1.0; }, 2.0, 5000, 1);
  CHECK(one.resolvent_side == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(one.path_side == doctest::Approx(0.5).epsilon(1e-8));

  auto m2 = build_free_flow(-1.0, 30.0, 3100);
  auto bump = on(*m2, [](double x) { return (x > 0 && x < 1) ? 1.0 : 0.0; });
  auto free = resolvent_duality(*m2, bump, [](const StatePoint&) { return 1.0; }, 1.0, 1000, 2);
  CHECK(free.resolvent_side == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(free.path_side == doctest::Approx(1.0).epsilon(1e-8));

  auto lin = resolvent_duality(*m1, uni, [](const StatePoint& p) { return p.coords[0]; }, 1.0, 20000, 3);
  CHECK(std::abs(lin.resolvent_side - lin.path_side) < 3 * lin.path_se);

  CHECK_THROWS_AS(resolvent_duality(*m1, uni, [](const StatePoint&) { return 1.0; }, 0.0, 10, 1), PdmpError);
}
