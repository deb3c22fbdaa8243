#pragma once

#include <memory>

#include "arrayscat/chebyshev.hpp"
#include "arrayscat/types.hpp"

namespace arrayscat {

enum class Geometry { square };

// Geometry, polarization and atomic constants of the array. Internal units:
// lengths in 1/k0, energies in Gamma0, omega_eg = 0 (rotating frame).
struct LatticeSpec {
  double spacing = 0.2;  // d / lambda0
  Vec3c polarization = sigma_plus();
  double gamma0 = 1.0;                 // energy unit
  double omega_eg_over_gamma0 = 1e8;   // only enters photon kinematics
  Geometry geometry = Geometry::square;

  static Vec3c sigma_plus() {
    const double s = 1.0 / std::sqrt(2.0);
    return {cplx{-s, 0.0}, cplx{0.0, -s}, cplx{}};
  }

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  double d() const { return 2.0 * kPi * spacing; }
  double cell_area() const { return d() * d(); }
  double bz_half_width() const { return kPi / d(); }
  double reciprocal_period() const { return 2.0 * kPi / d(); }
};

// Maps p into the first Brillouin zone [-pi/d, pi/d)^2.
Momentum2 reduce_to_bz(const LatticeSpec& spec, Momentum2 p);

// Outside the light cone. The circle |p| = k0 itself counts as bright.
bool is_dark(const Momentum2& p);

struct DispersionOptions {
  double tolerance = 1e-6;  // absolute, Gamma0
  double ewald_split = 0.0;  // 0 selects sqrt(pi)/d
  int max_degree = 160;
};

// Single-excitation complex dispersion eps(p) = Delta(p) - i Gamma(p)/2.
//
// The lattice sum is evaluated exactly by Ewald splitting. Within the first
// Brillouin zone the only non-analytic piece is the g = 0 reciprocal term,
//   S0(p) = -(3 pi / 2A) (1 - |e.p|^2) / gamma(p),  gamma = sqrt(p^2 - 1),
// which carries the whole radiative linewidth and the 1/sqrt divergence of
// Delta at the light cone. The remainder is real and analytic on the zone
// and is cached as a Chebyshev interpolant; fast evaluations combine the two.
// Instances are immutable after construction and safe to share.
class DispersionModel {
 public:
  explicit DispersionModel(LatticeSpec spec, DispersionOptions opts = {});

  const LatticeSpec& spec() const { return spec_; }
  const DispersionOptions& options() const { return opts_; }

  // Fast path. Throws DomainError exactly on the light cone.
  ComplexEnergy dispersion(Momentum2 p) const;
  // Delta and its derivatives (real part of eps; for bright p only the
  // analytic remainder contributes).
  Derivs2 delta_derivs(Momentum2 p, bool second = true) const;
  double delta(Momentum2 p) const { return dispersion(p).re; }
  // Closed-form radiative linewidth; zero outside the light cone.
  double gamma(Momentum2 p) const;

  // Direct Ewald evaluation, used to build and validate the cache.
  ComplexEnergy dispersion_ewald(Momentum2 p) const;

  // Estimated absolute error of the cached remainder (Gamma0).
  double error_estimate() const { return error_estimate_; }
  int surrogate_degree() const { return remainder_.degree(); }
  bool parity_reduced() const { return even_; }
  // |e.p|^2 = mxx px^2 + 2 mxy px py + myy py^2
  std::array<double, 3> polarization_matrix() const { return {mxx_, mxy_, myy_}; }

 private:
  cplx lattice_sum(const Momentum2& p, bool drop_singular) const;
  double polarization_form(const Momentum2& p) const;  // |e.p|^2
  double smooth_part_exact(const Momentum2& p) const;
  Derivs2 remainder_derivs(const Momentum2& p, bool second) const;
  double remainder_value(const Momentum2& p) const;
  Derivs2 singular_delta_derivs(const Momentum2& p, bool second) const;

  LatticeSpec spec_;
  DispersionOptions opts_;
  double split_ = 0.0;
  double mxx_ = 0.0, mxy_ = 0.0, myy_ = 0.0;  // |e.p|^2 = p^T M p
  bool even_ = false;
  Chebyshev2D remainder_;
  double error_estimate_ = 0.0;
};

}  // namespace arrayscat
