#include <cmath>

#include "doctest.h"
#include "pdmp/embedded_chain.hpp"
#include "pdmp/error.hpp"
#include "pdmp/models.hpp"
#include "pdmp/semigroup.hpp"

using namespace pdmp;

namespace {

DensityPair interior_pair(const PdmpModel& m, const std::function<double(double)>& f) {
  auto d = sample_density(m, [&](const StatePoint& p) { return f(p.coords[0]); });
  return DensityPair::make(m, d.values, Values(m.minus().size(), 0.0));
}

}  // namespace

TEST_CASE("R0 on the restart model") {
  auto m1 = build_drift_redistribute(200);
  auto r = apply_R0(*m1, interior_pair(*m1, [](double) { return 1.0; }), 0.0);
  const Grid& g = m1->grid();
  for (std::size_t c = 0; c < g.size(); ++c)
    CHECK(r.interior[c] == doctest::Approx(g.center(c).coords[0]).epsilon(1e-12));
  CHECK(r.outflux[0] == doctest::Approx(1.0).epsilon(1e-12));

  auto zero = apply_R0(*m1, interior_pair(*m1, [](double) { return 0.0; }), 0.7);
  for (double v : zero.interior) CHECK(v == 0.0);

  auto inflow = DensityPair::make(*m1, Values(g.size(), 0.0), Values{1.0});
  auto b = apply_R0(*m1, inflow, 1.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    CHECK(b.interior[c] == doctest::Approx(std::exp(-g.center(c).coords[0])).epsilon(1e-12));
  CHECK(b.outflux[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("K on simple models") {
  auto m2 = build_free_flow();
  auto kz = apply_K(*m2, interior_pair(*m2, [](double x) { return x > 0 && x < 1 ? 1.0 : 0.0; }), 0.0);
  CHECK(kz.norm(*m2) == 0.0);

  auto m1 = build_drift_redistribute(200);
  auto one = interior_pair(*m1, [](double) { return 1.0; });
  auto k0 = apply_K(*m1, one, 0.0);
  for (double v : k0.interior.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(k0.boundary[0] == 0.0);
  auto k1 = apply_K(*m1, one, 1.0);
  CHECK(k1.norm(*m1) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("K is substochastic and monotone in the discount") {
  auto m3 = build_constant_rate(0.8);
  KineticSlabParams kp;
  kp.collision = 0.6;
  kp.reflection = KineticSlabParams::Reflection::Diffuse;
  std::vector<ModelPtr> models{build_drift_redistribute(100, 0.5), m3, build_kinetic_slab(kp)};
  for (const auto& m : models) {
    auto p = uniform_pair(*m, 0.6);
    double prev = INFINITY;
    DensityPair last = p;
    for (double lam : {0.0, 0.5, 2.0}) {
      auto k = apply_K(*m, p, lam);
      CHECK(k.norm(*m) <= p.norm(*m) * (1 + 1e-6));
      CHECK(k.norm(*m) <= prev);
      if (lam > 0.0) {
        for (std::size_t c = 0; c < k.interior.values.size(); ++c)
          CHECK(k.interior.values[c] <= last.interior.values[c] + 1e-14);
      }
      prev = k.norm(*m);
      last = k;
    }
  }
}

TEST_CASE("invariant of K, lift and projection on the restart model") {
  auto m1 = build_drift_redistribute(1000);
  auto inv = invariant_of_K(*m1, interior_pair(*m1, [](double) { return 1.0; }), 1e-12, 50);
  CHECK(inv.iterations == 1);
  CHECK(inv.residual < 1e-10);
  for (double v : inv.pair.interior.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));

  auto lift = lift_invariant(*m1, inv.pair);
  CHECK(lift.c == doctest::Approx(0.5).epsilon(1e-10));
  const Grid& g = m1->grid();
  double l1 = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) l1 += std::abs(lift.f_star.values[c] - 2 * g.center(c).coords[0]) * g.weight(c);
  CHECK(l1 < 1e-10);

  auto back = project_invariant(*m1, lift.f_star);
  CHECK(pair_distance(*m1, back, inv.pair) < 1e-10);

  auto empty = DensityPair::make(*m1, Values(g.size(), 0.0), Values{0.0});
  CHECK_THROWS_AS(lift_invariant(*m1, empty), PdmpError);
  auto m2 = build_free_flow();
  CHECK_THROWS_AS(project_invariant(*m2, sample_density(*m2, [](const StatePoint&) { return 0.2; })), PdmpError);
  CHECK_THROWS_AS(invariant_of_K(*m2, uniform_pair(*m2), 1e-8, 10), PdmpError);
}

TEST_CASE("stochasticity defect") {
  auto m1 = build_drift_redistribute(200);
  auto m3 = build_constant_rate(2.0);
  auto m2 = build_free_flow();
  CHECK(std::abs(k_stochasticity_defect(*m1, uniform_pair(*m1))) < 1e-6);
  auto skew = interior_pair(*m1, [](double x) { return 3 * x * x; });
  CHECK(std::abs(k_stochasticity_defect(*m1, skew)) < 1e-6);
  CHECK(std::abs(k_stochasticity_defect(*m3, uniform_pair(*m3))) < 1e-6);
  CHECK(k_stochasticity_defect(*m2, uniform_pair(*m2)) == 1.0);
}

TEST_CASE("collisionless slab: boundary fixed point and uniform lift") {
  KineticSlabParams kp;
  auto m5 = build_kinetic_slab(kp);
  // Asymmetric start: all inflow at x = 0.
  Values b(m5->minus().size(), 0.0);
  for (std::size_t j = 0; j < b.size(); ++j)
    if (m5->minus().cells[j].point.coords[0] == 0.0) b[j] = 1.0;
  auto start = DensityPair::make(*m5, Values(m5->grid().size(), 0.0), b);
  auto inv = invariant_of_K(*m5, start, 1e-12, 50, 2);
  CHECK(inv.pair.interior.total_mass == 0.0);
  for (double v : inv.pair.boundary) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  auto lift = lift_invariant(*m5, inv.pair);
  for (double v : lift.f_star.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  auto back = project_invariant(*m5, lift.f_star);
  CHECK(pair_distance(*m5, back, inv.pair) < 1e-10);
}

TEST_CASE("divergent cells are reported") {
  auto m3 = build_constant_rate(0.0);
  auto r = apply_R0(*m3, uniform_pair(*m3), 0.0);
  CHECK(r.divergent.size() == m3->grid().size());
  CHECK_THROWS_AS(lift_invariant(*m3, uniform_pair(*m3)), PdmpError);
}
