#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace arrayscat {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using Vec3c = std::array<cplx, 3>;
using Mat3c = std::array<std::array<cplx, 3>, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// In-plane (quasi-)momentum in units of k0 = omega_eg / c.
struct Momentum2 {
  double kx = 0.0;
  double ky = 0.0;

  double norm() const { return std::hypot(kx, ky); }
  double norm2() const { return kx * kx + ky * ky; }

  Momentum2& operator+=(const Momentum2& o) {
    kx += o.kx;
    ky += o.ky;
    return *this;
  }
  Momentum2& operator-=(const Momentum2& o) {
    kx -= o.kx;
    ky -= o.ky;
    return *this;
  }
  friend Momentum2 operator+(Momentum2 a, const Momentum2& b) { return a += b; }
  friend Momentum2 operator-(Momentum2 a, const Momentum2& b) { return a -= b; }
  friend Momentum2 operator-(const Momentum2& a) { return {-a.kx, -a.ky}; }
  friend Momentum2 operator*(double s, const Momentum2& a) { return {s * a.kx, s * a.ky}; }
  friend Momentum2 operator*(const Momentum2& a, double s) { return {s * a.kx, s * a.ky}; }
  friend bool operator==(const Momentum2&, const Momentum2&) = default;
};

inline double dot(const Momentum2& a, const Momentum2& b) { return a.kx * b.kx + a.ky * b.ky; }

// Complex single- or two-excitation energy in units of Gamma0, measured from
// the atomic resonance (rotating frame). im = -Gamma/2 <= 0.
struct ComplexEnergy {
  double re = 0.0;
  double im = 0.0;

  cplx value() const { return {re, im}; }
  double delta() const { return re; }
  double gamma() const { return -2.0 * im; }

  friend ComplexEnergy operator+(const ComplexEnergy& a, const ComplexEnergy& b) {
    return {a.re + b.re, a.im + b.im};
  }
};

// Value, gradient and Hessian of a real scalar field on the momentum plane.
struct Derivs2 {
  double f = 0.0;
  double fx = 0.0;
  double fy = 0.0;
  double fxx = 0.0;
  double fxy = 0.0;
  double fyy = 0.0;

  double grad_norm() const { return std::hypot(fx, fy); }
  Derivs2& operator+=(const Derivs2& o) {
    f += o.f;
    fx += o.fx;
    fy += o.fy;
    fxx += o.fxx;
    fxy += o.fxy;
    fyy += o.fyy;
    return *this;
  }
};

}  // namespace arrayscat
