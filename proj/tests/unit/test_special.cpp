#include <doctest.h>

#include <cmath>

#include "arrayscat/green.hpp"
#include "arrayscat/special.hpp"

using namespace arrayscat;
using special::erf;
using special::erfc;
using special::erf_over_z;

TEST_CASE("complex erfc matches reference values") {
  // reference values from an arbitrary-precision evaluation
  struct Ref {
    cplx z, w;
  };
  const Ref refs[] = {
      {{1.0, 0.3}, {0.119382820301195, -0.120624811621474}},
      {{3.5, -0.2}, {9.06387155177554e-8, 7.67061460535074e-7}},
      {{0.1, -0.4}, {0.868163900442495, 0.471357179547138}},
  };
  for (const auto& r : refs) {
    const cplx w = erfc(r.z);
    CHECK(std::abs(w - r.w) <= 1e-12 * std::abs(r.w) + 1e-15);
  }
}

TEST_CASE("erfc on the real axis agrees with std::erfc") {
  for (double x : {-3.0, -0.7, 0.0, 0.4, 1.9, 4.2, 7.5}) {
    const cplx w = erfc(cplx{x, 0.0});
    CHECK(w.real() == doctest::Approx(std::erfc(x)).epsilon(1e-13));
    CHECK(std::abs(w.imag()) < 1e-15);
  }
}

TEST_CASE("erf symmetries") {
  const cplx z{0.8, -1.3};
  CHECK(std::abs(erf(-z) + erf(z)) < 1e-14);
  CHECK(std::abs(erf(std::conj(z)) - std::conj(erf(z))) < 1e-14);
  CHECK(std::abs(erf(z) + erfc(z) - 1.0) < 1e-14);
  // erf(z)/z -> 2/sqrt(pi) at the origin
  CHECK(std::abs(erf_over_z(cplx{1e-9, 0.0}) - 2.0 / std::sqrt(kPi)) < 1e-12);
}

TEST_CASE("dyadic Green's function: reciprocity and limits") {
  const Vec3 r{0.7, -1.1, 0.3};
  const Vec3 mr{-0.7, 1.1, -0.3};
  const Mat3c g = dyadic_green(r), gm = dyadic_green(mr);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(g[i][j] - g[j][i]) < 1e-14);
      CHECK(std::abs(g[i][j] - gm[i][j]) < 1e-14);
    }

  // radiative limit: Im G -> 1/(6 pi) times identity
  const Mat3c g0 = dyadic_green(Vec3{1e-4, 0.0, 0.0});
  CHECK(g0[0][0].imag() == doctest::Approx(1.0 / (6.0 * kPi)).epsilon(1e-6));
  CHECK(g0[1][1].imag() == doctest::Approx(1.0 / (6.0 * kPi)).epsilon(1e-6));

  // far field is transverse
  const double R = 1e5;
  const Mat3c gf = dyadic_green(Vec3{R, 0.0, 0.0});
  CHECK(std::abs(gf[0][0]) * R < 1e-5);
  CHECK(std::abs(gf[1][1]) * R == doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-4));

  CHECK_THROWS(dyadic_green(Vec3{0.0, 0.0, 0.0}));
}
