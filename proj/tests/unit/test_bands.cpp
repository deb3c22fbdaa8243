#include <doctest.h>

#include <cmath>

#include "arrayscat/bands.hpp"
#include "arrayscat/oracle.hpp"
#include "common.hpp"

using namespace arrayscat;

namespace {

const std::vector<CriticalPoint>& p0_points() {
  static const auto cps = find_critical_points(PairBand(testing::default_model(), {0.0, 0.0}));
  return cps;
}

}  // namespace

TEST_CASE("pair band at P = 0") {
  const PairBand band(testing::default_model(), {0.0, 0.0});
  const Momentum2 q{1.7, 0.3};
  CHECK(band.delta2(q).f == doctest::Approx(2.0 * band.model().delta(q)).epsilon(1e-12));
  CHECK(band.bright_count({0.1, 0.2}) == 2);
  CHECK(band.bright_count(q) == 0);
}

TEST_CASE("bright count splits one constituent off at finite P") {
  const PairBand band(testing::default_model(), {1.2, 0.0});
  // p1 = (1.1, 0) dark, p2 = (0.1, 0) bright
  CHECK(band.bright_count({0.5, 0.0}) == 1);
}

TEST_CASE("canonical representative and periodic distance") {
  const PairBand band(testing::default_model(), {0.3, -0.2});
  const double b = band.half_width();
  const Momentum2 q{0.4, -1.1};
  const Momentum2 c = band.canonical(q);
  CHECK(c.ky >= 0.0);
  CHECK(band.periodic_distance(c, -q) < 1e-12);
  CHECK(band.periodic_distance({b - 0.01, 0.0}, {-b + 0.01, 0.0}) == doctest::Approx(0.02));
}

TEST_CASE("P = 0 critical points: one maximum, one saddle orbit, no minima") {
  const auto& cps = p0_points();
  int maxima = 0, saddles = 0;
  for (const auto& c : cps) {
    CHECK(c.converged);
    CHECK(c.kind != CriticalKind::minimum);
    if (c.kind == CriticalKind::maximum) {
      ++maxima;
      CHECK(c.energy == doctest::Approx(2.1893036203).epsilon(1e-8));
      CHECK(std::abs(std::abs(c.q.kx) - 2.5) < 1e-6);
      CHECK(std::abs(std::abs(c.q.ky) - 2.5) < 1e-6);
    }
    if (c.kind == CriticalKind::saddle) {
      ++saddles;
      CHECK(c.energy == doctest::Approx(0.9956902766).epsilon(1e-8));
      CHECK(c.symmetry_orbit.size() == 2);
    }
  }
  CHECK(maxima == 1);
  CHECK(saddles == 1);
}

TEST_CASE("critical-point Hessians agree with finite differences") {
  const PairBand band(testing::default_model(), {0.0, 0.0});
  const double h = 1e-3;
  for (const auto& c : p0_points()) {
    auto f = [&](double dx, double dy) { return band.delta2({c.q.kx + dx, c.q.ky + dy}, false).f; };
    const double xx = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / (h * h);
    const double yy = (f(0, h) - 2 * f(0, 0) + f(0, -h)) / (h * h);
    const double xy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
    CHECK(c.hessian[0] == doctest::Approx(xx).epsilon(1e-3));
    CHECK(c.hessian[2] == doctest::Approx(yy).epsilon(1e-3));
    CHECK(std::abs(c.hessian[1] - xy) < 1e-3);
    const double det = xx * yy - xy * xy;
    if (c.kind == CriticalKind::maximum) CHECK((det > 0 && xx < 0));
    if (c.kind == CriticalKind::saddle) CHECK(det < 0);
  }
}

TEST_CASE("critical points at finite P match a brute-force grid search") {
  const PairBand band(testing::default_model(), {0.7, -1.9});
  const auto cps = find_critical_points(band);
  const auto grid = oracle::critical_points_grid(band, 512);
  const double cell = std::sqrt(2.0) * 2.0 * band.half_width() / 512;
  for (const auto& g : grid) {
    CHECK(g.kind != CriticalKind::minimum);
    double best = INFINITY;
    for (const auto& c : cps)
      if (c.kind == g.kind)
        for (const auto& o : c.symmetry_orbit) best = std::min(best, band.periodic_distance(o, g.q));
    CHECK(best <= cell);
  }
}

TEST_CASE("group velocity is the gradient norm and vanishes at critical points") {
  const PairBand band(testing::default_model(), {0.0, 0.0});
  const Momentum2 q{1.8, 0.9};
  CHECK(band.group_velocity(q).speed == doctest::Approx(band.delta2(q, false).grad_norm()));
  for (const auto& c : p0_points()) CHECK(band.group_velocity(c.q).speed < 1e-8);
  CHECK_FALSE(band.group_velocity({0.1, 0.0}).reliable);
}

TEST_CASE("saddle lines sit on the saddle level") {
  const PairBand band(testing::default_model(), {0.0, 0.0});
  std::vector<CriticalPoint> saddles;
  for (const auto& c : p0_points())
    if (c.kind == CriticalKind::saddle) saddles.push_back(c);
  const auto lines = saddle_lines(band, saddles[0].energy, saddles);
  REQUIRE(!lines.empty());
  for (const auto& l : lines)
    for (const auto& v : l.polyline) CHECK(std::abs(band.delta2(v, false).f - saddles[0].energy) < 1e-4);
}

TEST_CASE("critical energies are stable under doubling the seed grid") {
  const PairBand band(testing::default_model(), {0.5, 0.5});
  CriticalSearchOptions coarse, fine;
  coarse.grid_n = 128;
  fine.grid_n = 256;
  const auto a = find_critical_points(band, coarse);
  const auto b = find_critical_points(band, fine);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].kind == b[i].kind);
    CHECK(std::abs(a[i].energy - b[i].energy) < 1e-3);
  }
}
