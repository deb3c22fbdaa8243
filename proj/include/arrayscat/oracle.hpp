#pragma once

#include <array>
#include <string>
#include <vector>

#include "arrayscat/bands.hpp"
#include "arrayscat/lattice.hpp"

// Brute-force reference computations for tests and `verify`. Deliberately
// simple: fixed grids, no adaptivity, sums reduced in a fixed order.
namespace arrayscat::oracle {

struct OracleConfig {
  int grid_n = 2048;
  std::vector<double> eta_sequence{1e-1, 0.031622776601683794, 1e-2};
  int realspace_cutoff = 2400;  // shells: |m|, |n| <= cutoff
  double direct_eta = 0.16;     // largest damping rate of the direct sum, k0 units
  int direct_levels = 5;        // halvings of direct_eta

  void validate() const;  // grid_n >= 64, eta strictly decreasing and positive
};

// Polynomial extrapolation to x = 0 through (x_i, y_i) (Neville).
cplx extrapolate_to_zero(const std::vector<double>& x, const std::vector<cplx>& y);

struct DirectSumResult {
  ComplexEnergy value;
  std::vector<double> etas;
  std::vector<cplx> damped;  // eps at each eta
  double residual = 0.0;     // last correction of the extrapolation table
  bool flagged = false;      // corrections not decreasing
  std::string note;
};

// eps(p) from the real-space sum over |m|,|n| <= cutoff with factor e^{-eta R},
// eta = conv_factor / 2^k (k < levels), extrapolated to eta -> 0. Throws
// DomainError if the cutoff is too short for the smallest eta.
DirectSumResult dispersion_direct_sum(const LatticeSpec& spec, Momentum2 p, int cutoff, double conv_factor,
                                      int levels = 4);

// Same, with the damping adapted to p. The damped sum is analytic in eta only
// within the distance of p to the nearest light-cone circle, so the largest
// eta is capped at a third of that distance and the cutoff grown to keep
// eta R > 30 (never below cfg.realspace_cutoff).
DirectSumResult dispersion_direct_sum(const LatticeSpec& spec, Momentum2 p, const OracleConfig& cfg);

struct GridSumResult {
  cplx L{};
  std::array<cplx, 3> L_by_domain{};
  std::vector<cplx> per_eta;  // total L at each eta
  double residual = 0.0;
  bool flagged = false;
  std::string note;
};

// Midpoint sum of 1/(E + i eta - eps2) over an n x n grid of the full cell,
// times the node area and 1/2, extrapolated to eta -> 0 over the sequence.
GridSumResult propagator_grid_sum(const PairBand& band, double E, int grid_n, const std::vector<double>& etas,
                                  double flag_tolerance = 1e-3);

struct GridCriticalPoint {
  Momentum2 q;
  double energy = 0.0;
  CriticalKind kind = CriticalKind::unclassified;
  std::array<double, 3> hessian{};  // second differences: xx, xy, yy
};

// Discrete extrema (all 8 neighbours lower / higher) and saddles (four sign
// changes of f - f_center around the 8-neighbour ring) of Delta2 on the
// n x n node grid of the cell; one representative per symmetry orbit.
std::vector<GridCriticalPoint> critical_points_grid(const PairBand& band, int grid_n, double margin = 1e-2);

}  // namespace arrayscat::oracle
