#include "arrayscat/special.hpp"

#include <cmath>

namespace arrayscat::special {

namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955126;
constexpr double kInvSqrtPi = 0.5641895835477563;
constexpr double kSeriesRadius = 3.0;

// erf(z)/z = (2/sqrt(pi)) e^{-z^2} sum_n (2z^2)^n / (2n+1)!!
// All terms are positive for real z, so there is no cancellation along the
// real axis.
cplx erf_over_z_series(cplx z) {
  const cplx z2 = z * z;
  const cplx two_z2 = 2.0 * z2;
  cplx term = 1.0;
  cplx sum = 1.0;
  for (int n = 1; n < 200; ++n) {
    term *= two_z2 / double(2 * n + 1);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return kTwoOverSqrtPi * std::exp(-z2) * sum;
}

// Laplace continued fraction, evaluated backwards with a fixed depth:
// erfc(z) = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))).
cplx erfc_continued_fraction(cplx z) {
  constexpr int kDepth = 90;
  cplx t = z;
  for (int n = kDepth; n >= 1; --n) t = z + (0.5 * n) / t;
  return kInvSqrtPi * std::exp(-z * z) / t;
}

}  // namespace

cplx erf_over_z(cplx z) {
  if (std::abs(z) < kSeriesRadius) return erf_over_z_series(z);
  return erf(z) / z;
}

cplx erf(cplx z) {
  if (std::abs(z) < kSeriesRadius) return z * erf_over_z_series(z);
  return 1.0 - erfc(z);
}

cplx erfc(cplx z) {
  if (z.real() < 0.0) return 2.0 - erfc(-z);
  if (std::abs(z) < kSeriesRadius) return 1.0 - z * erf_over_z_series(z);
  return erfc_continued_fraction(z);
}

}  // namespace arrayscat::special
