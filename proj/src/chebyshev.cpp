#include "arrayscat/chebyshev.hpp"

#include <cmath>

namespace arrayscat {

namespace {

// T_k(x), T_k'(x), T_k''(x) for k = 0..n by the three-term recurrence.
void chebyshev_basis(double x, int n, double* t, double* dt, double* d2t) {
  t[0] = 1.0;
  if (dt) dt[0] = 0.0;
  if (d2t) d2t[0] = 0.0;
  if (n == 0) return;
  t[1] = x;
  if (dt) dt[1] = 1.0;
  if (d2t) d2t[1] = 0.0;
  for (int k = 1; k < n; ++k) {
    t[k + 1] = 2.0 * x * t[k] - t[k - 1];
    if (dt) dt[k + 1] = 2.0 * t[k] + 2.0 * x * dt[k] - dt[k - 1];
    if (d2t) d2t[k + 1] = 4.0 * dt[k] + 2.0 * x * d2t[k] - d2t[k - 1];
  }
}

constexpr int kMaxDegree = 256;

}  // namespace

Chebyshev2D Chebyshev2D::interpolate(const std::function<double(double, double)>& f, int degree) {
  Chebyshev2D s;
  s.n_ = degree;
  const int m = degree + 1;
  std::vector<double> nodes(m);
  for (int k = 0; k < m; ++k) nodes[k] = std::cos(kPi * (k + 0.5) / m);

  std::vector<double> vals(m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) vals[a * m + b] = f(nodes[a], nodes[b]);

  // T_i(node_k) = cos(i * theta_k)
  std::vector<double> tk(m * m);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) tk[i * m + k] = std::cos(i * kPi * (k + 0.5) / m);

  // separable transform: first over b (v), then over a (u)
  std::vector<double> half(m * m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int b = 0; b < m; ++b) acc += vals[a * m + b] * tk[j * m + b];
      half[a * m + j] = acc * (j == 0 ? 1.0 : 2.0) / m;
    }
  s.c_.assign(m * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int a = 0; a < m; ++a) acc += half[a * m + j] * tk[i * m + a];
      s.c_[i * m + j] = acc * (i == 0 ? 1.0 : 2.0) / m;
    }
  return s;
}

double Chebyshev2D::value(double u, double v) const {
  const int m = n_ + 1;
  double tu[kMaxDegree + 1], tv[kMaxDegree + 1];
  chebyshev_basis(u, n_, tu, nullptr, nullptr);
  chebyshev_basis(v, n_, tv, nullptr, nullptr);
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* row = &c_[i * m];
    double a = 0.0;
    for (int j = 0; j < m; ++j) a += row[j] * tv[j];
    sum += tu[i] * a;
  }
  return sum;
}

Derivs2 Chebyshev2D::derivs(double u, double v, bool second) const {
  const int m = n_ + 1;
  double tu[kMaxDegree + 1], dtu[kMaxDegree + 1], d2tu[kMaxDegree + 1];
  double tv[kMaxDegree + 1], dtv[kMaxDegree + 1], d2tv[kMaxDegree + 1];
  chebyshev_basis(u, n_, tu, dtu, second ? d2tu : nullptr);
  chebyshev_basis(v, n_, tv, dtv, second ? d2tv : nullptr);
  Derivs2 d;
  for (int i = 0; i < m; ++i) {
    const double* row = &c_[i * m];
    double a = 0.0, b = 0.0, c = 0.0;
    if (second) {
      for (int j = 0; j < m; ++j) {
        a += row[j] * tv[j];
        b += row[j] * dtv[j];
        c += row[j] * d2tv[j];
      }
    } else {
      for (int j = 0; j < m; ++j) {
        a += row[j] * tv[j];
        b += row[j] * dtv[j];
      }
    }
    d.f += tu[i] * a;
    d.fx += dtu[i] * a;
    d.fy += tu[i] * b;
    if (second) {
      d.fxx += d2tu[i] * a;
      d.fxy += dtu[i] * b;
      d.fyy += tu[i] * c;
    }
  }
  return d;
}

double Chebyshev2D::tail_estimate() const {
  const int m = n_ + 1;
  double tail = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i >= n_ - 1 || j >= n_ - 1) tail += std::abs(c_[i * m + j]);
  return tail;
}

}  // namespace arrayscat
