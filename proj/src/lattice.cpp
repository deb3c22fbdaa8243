#include "arrayscat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "arrayscat/errors.hpp"
#include "arrayscat/special.hpp"

namespace arrayscat {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477563;
// exp(-6.6^2) ~ 1e-19: both Ewald series are negligible beyond this argument.
constexpr double kEwaldReach = 6.6;

// Outgoing-wave branch of sqrt(k^2 - 1): positive for evanescent orders,
// -i sqrt(1 - k^2) for propagating ones.
cplx gamma_branch(double k2) {
  if (k2 > 1.0) return {std::sqrt(k2 - 1.0), 0.0};
  return {0.0, -std::sqrt(1.0 - k2)};
}

}  // namespace

void LatticeSpec::validate() const {
  if (!(spacing > 0.0 && spacing < 0.5)) {
    // Beyond d = lambda0/2 the light-cone circle leaves the zone and more
    // than one diffraction order radiates.
    std::ostringstream os;
    os << "lattice.spacing must satisfy 0 < d/lambda0 < 1/2, got " << spacing;
    throw ConfigError(os.str());
  }
  double n2 = 0.0;
  for (const auto& c : polarization) n2 += std::norm(c);
  if (std::abs(n2 - 1.0) > 1e-12) throw ConfigError("lattice.polarization must have unit norm");
  if (std::abs(polarization[2]) > 1e-14)
    throw ConfigError("lattice.polarization: only in-plane dipoles are supported");
  if (!(gamma0 > 0.0)) throw ConfigError("lattice.gamma0 must be positive");
  if (!(omega_eg_over_gamma0 > 0.0)) throw ConfigError("lattice.omega_eg_over_gamma0 must be positive");
}

Momentum2 reduce_to_bz(const LatticeSpec& spec, Momentum2 p) {
  const double b = spec.bz_half_width();
  const double t = 2.0 * b;
  auto wrap = [&](double x) {
    double y = x - t * std::floor((x + b) / t);
    if (y >= b) y -= t;  // guards rounding at the upper edge
    if (y < -b) y += t;
    return y;
  };
  return {wrap(p.kx), wrap(p.ky)};
}

bool is_dark(const Momentum2& p) { return p.norm2() > 1.0; }

DispersionModel::DispersionModel(LatticeSpec spec, DispersionOptions opts)
    : spec_(spec), opts_(opts) {
  spec_.validate();
  split_ = opts_.ewald_split > 0.0 ? opts_.ewald_split : std::sqrt(kPi) / spec_.d();
  const cplx ex = spec_.polarization[0], ey = spec_.polarization[1];
  mxx_ = std::norm(ex);
  myy_ = std::norm(ey);
  mxy_ = (ex * std::conj(ey)).real();
  even_ = std::abs(mxy_) < 1e-14;

  const double b = spec_.bz_half_width();
  auto sample = [&](double u, double v) {
    Momentum2 p;
    if (even_) {
      p = {b * std::sqrt(std::max(0.0, 0.5 * (u + 1.0))), b * std::sqrt(std::max(0.0, 0.5 * (v + 1.0)))};
    } else {
      p = {b * u, b * v};
    }
    return smooth_part_exact(p);
  };

  const double target = std::min(1e-4 * opts_.tolerance, 1e-10);
  int degree = even_ ? 16 : 32;
  for (;;) {
    remainder_ = Chebyshev2D::interpolate(sample, degree);
    if (remainder_.tail_estimate() < target || degree >= opts_.max_degree) break;
    degree = std::min(opts_.max_degree, degree * 3 / 2);
  }

  // Validate against the exact sum off the interpolation nodes.
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> uni(-b, b);
  double worst = remainder_.tail_estimate();
  for (int k = 0; k < 12; ++k) {
    const Momentum2 p{uni(rng), uni(rng)};
    worst = std::max(worst, std::abs(remainder_value(p) - smooth_part_exact(p)));
  }
  error_estimate_ = worst;
  if (worst > opts_.tolerance)
    throw ConvergenceError("dispersion cache did not reach the requested tolerance", worst);
}

double DispersionModel::polarization_form(const Momentum2& p) const {
  return mxx_ * p.kx * p.kx + 2.0 * mxy_ * p.kx * p.ky + myy_ * p.ky * p.ky;
}

// Regularized sum  sum_{R != 0} e^{i p.R} e^*.G(R).e  (plus the finite part of
// the on-site limit). With drop_singular the g = 0 reciprocal term S0 is
// replaced by its analytic remainder.
cplx DispersionModel::lattice_sum(const Momentum2& p, bool drop_singular) const {
  const double d = spec_.d();
  const double area = spec_.cell_area();
  const double e = split_;

  // real-space part
  cplx spatial{};
  const double rcut = kEwaldReach / e;
  const int nmax = static_cast<int>(std::ceil(rcut / d));
  const cplx shift = kI / (2.0 * e);
  double last_shell = 0.0;
  for (int m = -nmax; m <= nmax; ++m) {
    for (int n = -nmax; n <= nmax; ++n) {
      if (m == 0 && n == 0) continue;
      const double rx = m * d, ry = n * d;
      const double r = std::hypot(rx, ry);
      if (r > rcut) continue;
      const cplx vp = std::exp(kI * r) * special::erfc(r * e + shift);
      const cplx vm = std::exp(-kI * r) * special::erfc(r * e - shift);
      const cplx v = vp + vm, w = vp - vm;
      const double phi = std::exp(-r * r * e * e + 1.0 / (4.0 * e * e));
      const cplx v1 = kI * w - 4.0 * e * kInvSqrtPi * phi;
      const cplx v2 = -v + 8.0 * e * e * e * r * kInvSqrtPi * phi;
      const Momentum2 rhat{rx / r, ry / r};
      const double c2 = polarization_form(rhat);
      const cplx lh = (v + v1 / r - v / (r * r) + c2 * (v2 - 3.0 * v1 / r + 3.0 * v / (r * r))) /
                      (8.0 * kPi * r);
      spatial += lh * std::exp(kI * (p.kx * rx + p.ky * ry));
      if (std::max(std::abs(m), std::abs(n)) == nmax) last_shell = std::max(last_shell, std::abs(lh));
    }
  }

  // on-site limit of the regular part
  const cplx a = -kI / (2.0 * e);
  const cplx ea = special::erfc(a);
  const cplx ex = 2.0 * kInvSqrtPi * std::exp(-a * a);
  const cplx c1 = (2.0 * a * ea - ex) * e;
  const cplx c3 = ((4.0 / 3.0) * a * a * a * ea - ex * (2.0 * a * a - 1.0) / 3.0) * e * e * e;
  const cplx self = (c1 + 2.0 * c3) / (4.0 * kPi);

  // reciprocal-space part
  cplx spectral{};
  const double gp = spec_.reciprocal_period();
  const double kcut = 2.0 * e * kEwaldReach;
  const int gmax = static_cast<int>(std::ceil((kcut + p.norm()) / gp));
  for (int m = -gmax; m <= gmax; ++m) {
    for (int n = -gmax; n <= gmax; ++n) {
      const Momentum2 kg{p.kx + m * gp, p.ky + n * gp};
      const double k2 = kg.norm2();
      if (std::sqrt(k2) > kcut) continue;
      const double form = 1.0 - polarization_form(kg);
      const cplx g = gamma_branch(k2);
      cplx term;
      if (m == 0 && n == 0 && drop_singular) {
        term = -form * special::erf_over_z(g / (2.0 * e)) / (2.0 * e);
      } else {
        if (k2 == 1.0) throw DomainError("lattice sum evaluated on a light-cone circle");
        term = form * special::erfc(g / (2.0 * e)) / g;
      }
      spectral += term / (2.0 * area);
    }
  }

  if (last_shell > 1e-3 * opts_.tolerance)
    throw ConvergenceError("Ewald real-space sum not converged at cutoff", last_shell);
  return spatial + self + spectral;
}

ComplexEnergy DispersionModel::dispersion_ewald(Momentum2 p) const {
  const cplx eps = spec_.gamma0 * (-3.0 * kPi * lattice_sum(p, false) - 0.5 * kI);
  ComplexEnergy out{eps.real(), eps.imag()};
  if (is_dark(reduce_to_bz(spec_, p))) {
    if (std::abs(out.im) > 1e-8 * spec_.gamma0)
      throw ConvergenceError("dark-branch linewidth did not cancel", std::abs(out.im));
    out.im = 0.0;
  }
  return out;
}

double DispersionModel::smooth_part_exact(const Momentum2& p) const {
  const cplx eps = spec_.gamma0 * (-3.0 * kPi * lattice_sum(p, true) - 0.5 * kI);
  return eps.real();
}

double DispersionModel::remainder_value(const Momentum2& p) const {
  const double b = spec_.bz_half_width();
  if (even_) {
    const double s = p.kx / b, t = p.ky / b;
    return remainder_.value(2.0 * s * s - 1.0, 2.0 * t * t - 1.0);
  }
  return remainder_.value(p.kx / b, p.ky / b);
}

Derivs2 DispersionModel::remainder_derivs(const Momentum2& p, bool second) const {
  const double b = spec_.bz_half_width();
  Derivs2 out;
  if (even_) {
    const double s = p.kx / b, t = p.ky / b;
    const Derivs2 g = remainder_.derivs(2.0 * s * s - 1.0, 2.0 * t * t - 1.0, second);
    const double ux = 4.0 * p.kx / (b * b), vy = 4.0 * p.ky / (b * b);
    const double uxx = 4.0 / (b * b);
    out.f = g.f;
    out.fx = g.fx * ux;
    out.fy = g.fy * vy;
    if (second) {
      out.fxx = g.fxx * ux * ux + g.fx * uxx;
      out.fyy = g.fyy * vy * vy + g.fy * uxx;
      out.fxy = g.fxy * ux * vy;
    }
  } else {
    const Derivs2 g = remainder_.derivs(p.kx / b, p.ky / b, second);
    out.f = g.f;
    out.fx = g.fx / b;
    out.fy = g.fy / b;
    if (second) {
      out.fxx = g.fxx / (b * b);
      out.fxy = g.fxy / (b * b);
      out.fyy = g.fyy / (b * b);
    }
  }
  return out;
}

// Dark-side real part of S0: C n(p) (p^2 - 1)^{-1/2}, n = 1 - p^T M p.
Derivs2 DispersionModel::singular_delta_derivs(const Momentum2& p, bool second) const {
  const double c = -3.0 * kPi * spec_.gamma0 / (2.0 * spec_.cell_area());
  const double x = p.kx, y = p.ky;
  const double s = x * x + y * y - 1.0;
  const double n = 1.0 - polarization_form(p);
  const double nx = -2.0 * (mxx_ * x + mxy_ * y);
  const double ny = -2.0 * (mxy_ * x + myy_ * y);
  const double w = 1.0 / std::sqrt(s);
  const double w3 = w * w * w;
  const double wx = -x * w3, wy = -y * w3;
  Derivs2 out;
  out.f = c * n * w;
  out.fx = c * (nx * w + n * wx);
  out.fy = c * (ny * w + n * wy);
  if (second) {
    const double w5 = w3 * w * w;
    const double wxx = -w3 + 3.0 * x * x * w5;
    const double wyy = -w3 + 3.0 * y * y * w5;
    const double wxy = 3.0 * x * y * w5;
    out.fxx = c * (-2.0 * mxx_ * w + 2.0 * nx * wx + n * wxx);
    out.fyy = c * (-2.0 * myy_ * w + 2.0 * ny * wy + n * wyy);
    out.fxy = c * (-2.0 * mxy_ * w + nx * wy + ny * wx + n * wxy);
  }
  return out;
}

ComplexEnergy DispersionModel::dispersion(Momentum2 p) const {
  p = reduce_to_bz(spec_, p);
  const double r2 = p.norm2();
  if (r2 == 1.0) throw DomainError("dispersion: momentum exactly on the light cone");
  const double smooth = remainder_value(p);
  const double c = -3.0 * kPi * spec_.gamma0 / (2.0 * spec_.cell_area());
  const double n = 1.0 - polarization_form(p);
  if (r2 > 1.0) return {smooth + c * n / std::sqrt(r2 - 1.0), 0.0};
  return {smooth, c * n / std::sqrt(1.0 - r2)};
}

double DispersionModel::gamma(Momentum2 p) const {
  p = reduce_to_bz(spec_, p);
  const double r2 = p.norm2();
  if (r2 > 1.0) return 0.0;
  if (r2 == 1.0) throw DomainError("gamma: momentum exactly on the light cone");
  const double c = 3.0 * kPi * spec_.gamma0 / spec_.cell_area();
  return c * (1.0 - polarization_form(p)) / std::sqrt(1.0 - r2);
}

Derivs2 DispersionModel::delta_derivs(Momentum2 p, bool second) const {
  p = reduce_to_bz(spec_, p);
  Derivs2 out = remainder_derivs(p, second);
  if (p.norm2() > 1.0) out += singular_delta_derivs(p, second);
  return out;
}

}  // namespace arrayscat
