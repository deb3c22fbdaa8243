#include <doctest.h>

#include <cmath>

#include "arrayscat/errors.hpp"
#include "common.hpp"

using namespace arrayscat;

TEST_CASE("decay rate at normal incidence") {
  const auto m = testing::default_model();
  const double d = m->spec().d();
  // only the zeroth diffraction order radiates: Gamma = 3 pi / d^2 (k0 = 1)
  CHECK(m->gamma({0.0, 0.0}) == doctest::Approx(3.0 * kPi / (d * d)).epsilon(1e-6));
  CHECK(m->gamma({0.0, 0.0}) == doctest::Approx(5.968).epsilon(1e-3));
}

TEST_CASE("dark modes do not decay") {
  const auto m = testing::default_model();
  for (Momentum2 p : {Momentum2{1.3, 0.2}, Momentum2{2.5, 2.5}, Momentum2{-2.0, 1.0}}) {
    CHECK(is_dark(p));
    CHECK(m->gamma(p) == 0.0);
  }
  CHECK_FALSE(is_dark({0.3, 0.4}));
}

TEST_CASE("dispersion symmetries") {
  const auto m = testing::default_model();
  const double b = m->spec().bz_half_width();
  for (Momentum2 p : {Momentum2{0.3, 0.1}, Momentum2{1.7, 0.4}, Momentum2{-2.2, 1.3}}) {
    const double e = m->delta(p);
    CHECK(m->delta({-p.ky, p.kx}) == doctest::Approx(e).epsilon(1e-9));
    CHECK(m->delta({-p.kx, -p.ky}) == doctest::Approx(e).epsilon(1e-9));
    CHECK(m->delta({p.kx, -p.ky}) == doctest::Approx(e).epsilon(1e-9));
    CHECK(m->delta({p.kx + 2 * b, p.ky}) == doctest::Approx(e).epsilon(1e-9));
  }
}

TEST_CASE("surrogate agrees with the direct Ewald sum") {
  const auto m = testing::default_model();
  for (Momentum2 p : {Momentum2{0.2, 0.5}, Momentum2{1.4, 0.0}, Momentum2{2.5, 2.5}, Momentum2{-1.9, 0.8}}) {
    const ComplexEnergy a = m->dispersion(p), e = m->dispersion_ewald(p);
    CHECK(std::abs(a.re - e.re) < 1e-6);
    CHECK(std::abs(a.im - e.im) < 1e-6);
  }
}

TEST_CASE("analytic derivatives match finite differences") {
  const auto m = testing::default_model();
  const Momentum2 p{1.6, 0.7};
  const Derivs2 d = m->delta_derivs(p);
  const double h = 1e-5;
  const double fx = (m->delta({p.kx + h, p.ky}) - m->delta({p.kx - h, p.ky})) / (2 * h);
  const double fy = (m->delta({p.kx, p.ky + h}) - m->delta({p.kx, p.ky - h})) / (2 * h);
  CHECK(d.fx == doctest::Approx(fx).epsilon(1e-5));
  CHECK(d.fy == doctest::Approx(fy).epsilon(1e-5));
  const double H = 1e-3;
  const double fxx = (m->delta({p.kx + H, p.ky}) - 2 * d.f + m->delta({p.kx - H, p.ky})) / (H * H);
  CHECK(d.fxx == doctest::Approx(fxx).epsilon(1e-3));
}

TEST_CASE("dispersion diverges towards the light cone from outside") {
  const auto m = testing::default_model();
  // just outside |p| = 1 the 1/sqrt singularity pushes Delta down monotonically
  double prev = m->delta({1.2, 0.0});
  for (double r : {1.1, 1.05, 1.01, 1.001, 1.0001}) {
    const double e = m->delta({r, 0.0});
    CHECK(e < prev);
    prev = e;
  }
  CHECK_THROWS_AS(m->dispersion({1.0, 0.0}), DomainError);
}

TEST_CASE("lattice spec validation") {
  LatticeSpec s;
  s.spacing = 0.6;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.spacing = 0.2;
  s.polarization = {cplx{}, cplx{}, cplx{1.0, 0.0}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("zone reduction") {
  const LatticeSpec s;
  const double b = s.bz_half_width();
  const Momentum2 r = reduce_to_bz(s, {b + 0.3, -3 * b - 0.1});
  CHECK(r.kx == doctest::Approx(-b + 0.3));
  CHECK(r.ky == doctest::Approx(b - 0.1));
}
