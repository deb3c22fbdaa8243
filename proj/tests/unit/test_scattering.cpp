#include <doctest.h>

#include <cmath>
#include <numeric>

#include "arrayscat/criticality.hpp"
#include "arrayscat/errors.hpp"
#include "arrayscat/scattering.hpp"
#include "common.hpp"

using namespace arrayscat;

namespace {

const LocalPropagator& lp0() {
  static const LocalPropagator lp(PairBand(testing::default_model(), {0.0, 0.0}));
  return lp;
}

}  // namespace

TEST_CASE("s eigenvalue is sub-unitary") {
  for (double E : {-3.0, -1.0, 0.2, 0.9, 1.4, 2.0, 2.15}) {
    const auto s = s_eigenvalue(lp0(), E);
    CHECK(s.magnitude2 <= 1.0 + 1e-6);
    CHECK(s.phase > -kPi);
    CHECK(s.phase <= kPi);
  }
}

TEST_CASE("s = 1 above the band") {
  const auto s = s_eigenvalue(lp0(), 2.5);
  CHECK(s.trivial);
  CHECK(std::abs(s.s - 1.0) < 1e-12);
}

TEST_CASE("optical theorem: 1 - |s|^2 is the inelastic flux") {
  // |s|^2 = 1 - 4 pi^2 |T|^2 rho_0 (rho_1 + rho_2) ... checked in the form
  // 1 - |s|^2 = 4 Im(L) Im(L0) / |L|^2 with rho = -Im L / pi
  const double E = 1.3;
  const auto ev = lp0().evaluate(E);
  const auto s = s_eigenvalue(ev, {0.0, 0.0}, E);
  const cplx L = ev.plus.L;
  const double expect = 4.0 * ev.plus.L_by_domain[0].imag() * (L.imag() - ev.plus.L_by_domain[0].imag()) /
                        std::norm(L);
  CHECK(1.0 - s.magnitude2 == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("T-matrix") {
  PropagatorResult r;
  r.L = {0.5, -2.0};
  CHECK(std::abs(t_matrix(r) + 1.0 / r.L) < 1e-15);
  r.L = {};
  CHECK_THROWS_AS(t_matrix(r), SingularTMatrixError);
}

TEST_CASE("branching ratios are normalized") {
  const auto model = testing::default_model();
  for (double E : {-0.5, 0.7, 1.8}) {
    const auto r = cross_section(IncomingState::photon_pair_normal(*model, E), lp0());
    const double sum = std::accumulate(r.branching.begin(), r.branching.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.sigma_tot == doctest::Approx(r.sigma[0] + r.sigma[1] + r.sigma[2]).epsilon(1e-12));
    for (double s : r.sigma) CHECK(s >= 0.0);
  }
}

TEST_CASE("dark pair kinematics") {
  const auto model = testing::default_model();
  const auto in = IncomingState::dark_pair(*model, {1.8, 0.4}, {-1.5, 1.1});
  CHECK(in.alpha == 0);
  CHECK(in.P.kx == doctest::Approx(0.3));
  CHECK(in.P.ky == doctest::Approx(1.5));
  CHECK(in.E == doctest::Approx(model->delta({1.8, 0.4}) + model->delta({-1.5, 1.1})));
  CHECK(in.v_g > 0.0);
  CHECK_THROWS_AS(IncomingState::dark_pair(*model, {0.2, 0.1}, {1.5, 1.1}), DomainError);
}

TEST_CASE("symmetric photon pair carries the requested energy and momentum") {
  const auto model = testing::default_model();
  const auto in = IncomingState::photon_pair_symmetric(*model, {0.4, -0.2}, 1.1);
  REQUIRE(in.photons.size() == 2);
  CHECK(in.E == 1.1);
  CHECK(in.photons[0].p.kx + in.photons[1].p.kx == doctest::Approx(0.4));
  CHECK(in.photons[0].direction == -in.photons[1].direction);
  CHECK(in.v_g == doctest::Approx(2.0 * in.photons[0].chi).epsilon(1e-6));
}

TEST_CASE("eigenvector weights are normalized on the shell") {
  const auto w = eigenvector_weights(lp0(), 1.5);
  REQUIRE(!w.empty());
  double norm = 0.0;
  for (const auto& x : w) norm += x.weight * x.weight * x.dl;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("scaling fit recovers synthetic classes") {
  const auto dE = log_offsets(1e-5, 1e-2, 4);
  struct Case {
    ScalingClass cls;
    double kappa;
  };
  for (const Case c : {Case{ScalingClass::log2, 3.0}, Case{ScalingClass::log1, 0.5},
                       Case{ScalingClass::inv_dE_log2, 2.0}, Case{ScalingClass::inv_sqrt_dE_log1, 7.0}}) {
    const auto [a, b] = exponents(c.cls);
    std::vector<double> y;
    for (double x : dE) y.push_back(0.3 * std::pow(x, a) * std::pow(std::abs(std::log(x / c.kappa)), b));
    const auto f = scaling_fit(dE, y);
    CHECK(f.fitted_class == c.cls);
    CHECK(f.r2 > 0.999);
    CHECK(f.measured_power == doctest::Approx(a).epsilon(1e-6));
  }
}

TEST_CASE("scaling fit rejects unusable input") {
  const std::vector<double> dE{1e-3, 1e-4};
  CHECK_THROWS_AS(scaling_fit(dE, std::vector<double>{1.0, 2.0}), DomainError);
  const auto x = log_offsets(1e-5, 1e-2, 2);
  std::vector<double> y(x.size(), 1.0);
  y[2] = 0.0;
  CHECK_THROWS_AS(scaling_fit(x, y), DomainError);
}

TEST_CASE("reference classification table") {
  CHECK(reference_class(IncomingKind::photons, 0, CriticalKind::saddle) == ScalingClass::log1);
  CHECK(reference_class(IncomingKind::photons, 2, CriticalKind::saddle) == ScalingClass::log2);
  CHECK(reference_class(IncomingKind::photons, 0, CriticalKind::maximum) == ScalingClass::log2);
  CHECK(reference_class(IncomingKind::dark_at_critical, 1, CriticalKind::maximum) == ScalingClass::inv_dE_log2);
  CHECK(reference_class(IncomingKind::dark_off_critical, 0, CriticalKind::saddle) == ScalingClass::log1);
}
