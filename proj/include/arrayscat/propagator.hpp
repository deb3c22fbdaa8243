#pragma once

#include <array>
#include <span>
#include <vector>

#include "arrayscat/bands.hpp"
#include "arrayscat/types.hpp"

namespace arrayscat {

enum class Side { plus_i0, minus_i0 };

struct PropagatorResult {
  cplx L{};
  std::array<cplx, 3> L_by_domain{};  // indexed by the number of bright constituents
  Side side = Side::plus_i0;
  std::vector<double> eta_used;       // empty for the contour path
  double error_estimate = 0.0;
};

// A point of the on-shell set Delta2(q) = E in the dark domain, as produced by
// the column quadrature: `measure` is its weight in  int dq delta(E - Delta2)
// over the whole cell, `dl` the contour length it represents.
struct ShellNode {
  Momentum2 q;
  double measure = 0.0;
  double dl = 0.0;
  double speed = 0.0;  // |grad_q Delta2|
};

struct PropagatorOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;
  int max_intervals = 20000;      // outer (x) partition
  double inner_abs_tol = 1e-10;
  double inner_rel_tol = 1e-9;
  int inner_max_intervals = 400;
  int root_samples = 96;          // f_y samples per column segment
  int scan_columns = 256;         // probes for contour tangencies
  bool use_critical_points = true;  // add critical-point columns as breakpoints
};

// Local propagator L(P, z) = int_{BZ2} dq / (z - eps2(P, q)), evaluated as an
// iterated integral over columns of fixed qx. Columns are split where they
// cross the light-cone circles; on dark segments the poles of 1/(E - Delta2)
// are removed analytically (principal value plus -i pi residues). The pair
// zone is the full cell with weight 1/2.
class LocalPropagator {
 public:
  explicit LocalPropagator(PairBand band, PropagatorOptions opts = {});

  const PairBand& band() const { return band_; }
  const PropagatorOptions& options() const { return opts_; }
  const std::vector<CriticalPoint>& critical_points() const { return critical_; }

  struct Evaluation {
    PropagatorResult plus;
    PropagatorResult minus;
    std::vector<ShellNode> shell;  // filled when requested
    int columns = 0;
  };
  // Both sides of the cut from one pass.
  Evaluation evaluate(double E, bool collect_shell = false) const;
  PropagatorResult operator()(double E, Side side) const;

  // Oracle path: L(E +- i eta) by direct quadrature for each eta, extrapolated
  // to eta -> 0 by a polynomial through all points.
  PropagatorResult evaluate_eta(double E, Side side, std::span<const double> etas) const;
  // Domain-resolved L(E + i eta); eta may be negative.
  std::array<cplx, 3> at_eta(double E, double eta, double* error = nullptr) const;

  // Density of dark on-shell states, -Im L0(E + i0) / pi.
  double dark_dos(double E) const;

  // Column positions where the equi-energy contour has a vertical tangent.
  std::vector<double> contour_tangencies(double E) const;

 private:
  struct Segment {
    double a = 0.0, c = 0.0;
    int beta = 0;
    bool periodic = false;
    std::vector<double> roots;
    std::vector<double> slopes;  // d Delta2 / dy at the roots
    std::vector<double> curvatures;
    std::vector<double> extrema;  // of Delta2 along the column (dark segments)
  };
  struct Column {
    double x = 0.0;
    std::vector<Segment> segments;
    int root_count() const;
  };

  std::vector<double> circle_crossings(double x) const;
  Column analyze(double x, double E) const;
  void find_roots(double x, double E, Segment& s) const;
  std::vector<double> outer_breakpoints(double E, bool with_tangencies) const;

  PairBand band_;
  PropagatorOptions opts_;
  std::vector<CriticalPoint> critical_;
  std::vector<Momentum2> circle_centers_;  // reduced to the cell
};

}  // namespace arrayscat
