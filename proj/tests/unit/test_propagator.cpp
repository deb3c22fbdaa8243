#include <doctest.h>

#include <cmath>

#include "arrayscat/errors.hpp"
#include "arrayscat/oracle.hpp"
#include "arrayscat/propagator.hpp"
#include "common.hpp"

using namespace arrayscat;

TEST_CASE("domain decomposition adds up; the dark part is conjugate across the axis") {
  const LocalPropagator lp(PairBand(testing::default_model(), {0.4, 0.9}));
  for (double E : {-1.5, 0.4, 1.7, 2.6}) {
    const auto ev = lp.evaluate(E);
    const cplx sum = ev.plus.L_by_domain[0] + ev.plus.L_by_domain[1] + ev.plus.L_by_domain[2];
    CHECK(std::abs(sum - ev.plus.L) < 1e-12 * (1 + std::abs(ev.plus.L)));
    // bright constituents decay, so only the dark domain has L(E - i0) = L(E + i0)^*
    const cplx d0 = ev.plus.L_by_domain[0];
    CHECK(std::abs(ev.minus.L_by_domain[0] - std::conj(d0)) < 1e-9 * (1 + std::abs(d0)));
    CHECK(std::abs(ev.minus.L_by_domain[2] - ev.plus.L_by_domain[2]) < 1e-9 * (1 + std::abs(ev.plus.L)));
    // causal sign: -Im L(E + i0) is a density of states
    CHECK(ev.plus.L.imag() <= 1e-12);
    for (const auto& Lb : ev.plus.L_by_domain) CHECK(Lb.imag() <= 1e-12);
  }
}

TEST_CASE("high-energy tail is the zone area over E") {
  const LocalPropagator lp(PairBand(testing::default_model(), {0.0, 0.0}));
  const double b = lp.band().half_width();
  const double area = 2.0 * b * b;  // half of the cell
  const double E = 2000.0;
  const cplx L = lp(E, Side::plus_i0).L;
  CHECK(L.real() * E == doctest::Approx(area).epsilon(2e-3));
}

TEST_CASE("dark density of states integrates the on-shell measure") {
  const LocalPropagator lp(PairBand(testing::default_model(), {0.0, 0.0}));
  const double E = 1.5;
  const auto ev = lp.evaluate(E);
  CHECK(lp.dark_dos(E) == doctest::Approx(-ev.plus.L_by_domain[0].imag() / kPi).epsilon(1e-6));
}

TEST_CASE("propagator agrees with a regulated grid sum away from critical energies") {
  const PairBand band(testing::default_model(), {0.3, 0.2});
  const LocalPropagator lp(band);
  const double E = 1.3;
  const cplx L = lp(E, Side::plus_i0).L;
  const auto g = oracle::propagator_grid_sum(band, E, 1024, {1e-1, 0.031622776601683794, 1e-2});
  CHECK(std::abs(L - g.L) / std::abs(g.L) < 5e-3);
}

TEST_CASE("trivial sector: no dark states below the band") {
  const LocalPropagator lp(PairBand(testing::default_model(), {0.0, 0.0}));
  const auto ev = lp.evaluate(2.5);
  CHECK(ev.plus.L_by_domain[0].imag() == 0.0);
}

TEST_CASE("critical energies themselves are rejected") {
  const LocalPropagator lp(PairBand(testing::default_model(), {0.0, 0.0}));
  for (const auto& c : lp.critical_points()) CHECK_THROWS_AS(lp.evaluate(c.energy), DomainError);
}

TEST_CASE("folded contour: two vertical tangents within one scan interval") {
  // at this (P, E) the iso-line has an S-shaped fold with tangents 7e-5 apart
  const LocalPropagator lp(PairBand(testing::default_model(), {-1.3361851023876297, -2.1394351254818345}));
  const double E = -1.073099501590519;
  const auto t = lp.contour_tangencies(E);
  int close = 0;
  for (double x : t) close += std::abs(x + 0.5857) < 1e-3;
  CHECK(close >= 2);
  const cplx L = lp(E, Side::plus_i0).L;
  const cplx L2 = lp(E + 1e-3, Side::plus_i0).L;
  CHECK(std::isfinite(L.real()));
  CHECK(std::isfinite(L.imag()));
  CHECK(std::abs(L2 - L) < 1e-2);
}
