#include "arrayscat/green.hpp"

#include "arrayscat/errors.hpp"

namespace arrayscat {

Mat3c dyadic_green(const Vec3& r) {
  const double rr = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
  if (!(rr > 0.0)) throw DomainError("dyadic_green: zero displacement");
  const double inv = 1.0 / rr;
  const cplx pref = std::exp(kI * rr) / (4.0 * kPi * rr);
  const cplx a = pref * (1.0 + kI * inv - inv * inv);
  const cplx b = pref * (-1.0 - 3.0 * kI * inv + 3.0 * inv * inv);
  const Vec3 n{r[0] * inv, r[1] * inv, r[2] * inv};
  Mat3c g{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g[i][j] = b * (n[i] * n[j]) + (i == j ? a : cplx{});
  return g;
}

cplx project(const Mat3c& g, const Vec3c& e1, const Vec3c& e2) {
  cplx s{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += std::conj(e1[i]) * g[i][j] * e2[j];
  return s;
}

}  // namespace arrayscat
