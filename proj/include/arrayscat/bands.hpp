#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "arrayscat/lattice.hpp"
#include "arrayscat/types.hpp"

namespace arrayscat {

// Point-group element acting on relative momenta of a pair with fixed total
// momentum: q -> g q + t. Inversion q -> -q is handled separately.
struct PairSymmetry {
  int g[2][2];
  Momentum2 t;
  Momentum2 apply(const Momentum2& q) const {
    return {g[0][0] * q.kx + g[0][1] * q.ky + t.kx, g[1][0] * q.kx + g[1][1] * q.ky + t.ky};
  }
};

// The two-excitation band at fixed total momentum P:
//   eps2(q) = eps(P/2 + q) + eps(P/2 - q).
// q lives on the cell [-b, b)^2 (b = pi/d); q and -q label the same state, so
// the physical zone is half the cell.
class PairBand {
 public:
  PairBand(std::shared_ptr<const DispersionModel> model, Momentum2 P);

  const DispersionModel& model() const { return *model_; }
  std::shared_ptr<const DispersionModel> model_ptr() const { return model_; }
  const LatticeSpec& spec() const { return model_->spec(); }
  Momentum2 total_momentum() const { return P_; }
  double half_width() const { return b_; }

  Momentum2 p1(const Momentum2& q) const { return {0.5 * P_.kx + q.kx, 0.5 * P_.ky + q.ky}; }
  Momentum2 p2(const Momentum2& q) const { return {0.5 * P_.kx - q.kx, 0.5 * P_.ky - q.ky}; }

  ComplexEnergy eps2(const Momentum2& q) const;
  // Real part Delta2 and its q-derivatives.
  Derivs2 delta2(const Momentum2& q, bool second = true) const;
  // Number of constituent momenta inside the light cone (the domain index beta).
  int bright_count(const Momentum2& q) const;
  // Distance (in momentum) of the nearer constituent from its light-cone circle.
  double light_cone_distance(const Momentum2& q) const;

  struct Velocity {
    double speed = 0.0;
    bool reliable = true;  // false within `margin` of a light-cone circle or for bright pairs
  };
  Velocity group_velocity(const Momentum2& q, double margin = 0.0) const;

  // Map into [-b, b)^2 and pick the representative of {q, -q} with qy > 0
  // (or qy = 0, qx >= 0).
  Momentum2 canonical(const Momentum2& q) const;
  Momentum2 wrap(const Momentum2& q) const;
  // Shortest distance between q1 and q2 modulo the reciprocal lattice.
  double periodic_distance(const Momentum2& q1, const Momentum2& q2) const;

  // Lattice symmetries that leave Delta2 invariant (identity included).
  const std::vector<PairSymmetry>& symmetries() const { return symmetries_; }
  // All distinct images of q in [-b, b)^2 under symmetries and inversion.
  std::vector<Momentum2> orbit(const Momentum2& q, double tol) const;

 private:
  std::shared_ptr<const DispersionModel> model_;
  Momentum2 P_;
  double b_;
  std::vector<PairSymmetry> symmetries_;
};

enum class CriticalKind { maximum, saddle, minimum, unclassified };
const char* to_string(CriticalKind k);

struct CriticalPoint {
  Momentum2 q;  // canonical representative
  double energy = 0.0;
  CriticalKind kind = CriticalKind::unclassified;
  std::array<double, 3> hessian{};       // xx, xy, yy
  std::array<double, 2> hessian_eigs{};  // ascending
  std::vector<Momentum2> symmetry_orbit;
  double gradient_norm = 0.0;
  bool converged = true;
  std::string diagnostic;
};

struct CriticalSearchOptions {
  int grid_n = 256;              // seed cells across the cell width
  double light_cone_margin = 1e-2;  // in units of pi/d
  double dedup_tol = 1e-4;       // in units of pi/d
  double gradient_tol = 1e-9;    // Gamma0 / k0
  double det_tol = 1e-8;         // relative, for degenerate Hessians
  int max_newton = 60;
};

std::vector<CriticalPoint> find_critical_points(const PairBand& band, const CriticalSearchOptions& opts = {});

struct SaddleLine {
  std::vector<Momentum2> polyline;
  bool closed = false;
};

struct ContourOptions {
  int grid_n = 256;
  double light_cone_margin = 1e-2;  // pi/d units
  double exclusion_radius = 3e-2;   // pi/d units, around each saddle image
  double tolerance = 1e-4;          // Gamma0
};

// Iso-line Delta2 = level over the full cell, restricted to dark pairs and
// split at the neighbourhoods of `saddles`. Vertices are projected onto the
// contour by Newton steps; a vertex that cannot reach `tolerance` is dropped.
std::vector<SaddleLine> saddle_lines(const PairBand& band, double level,
                                     const std::vector<CriticalPoint>& saddles,
                                     const ContourOptions& opts = {});

}  // namespace arrayscat
