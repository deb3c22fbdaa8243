#pragma once

#include <array>
#include <optional>
#include <vector>

#include "arrayscat/scattering.hpp"

// Energy sweeps towards a critical point and the expected scaling classes.
namespace arrayscat {

// dE_max, ..., dE_min, log-spaced with `per_decade` points per decade.
std::vector<double> log_offsets(double dE_min, double dE_max, int per_decade);

// Point on the ray from the critical point along the Hessian eigenvector whose
// curvature sign matches `side` (-1: energy below E_crit, +1: above), where
// Delta2 = E_crit + side * dE.
Momentum2 approach_critical(const PairBand& band, const CriticalPoint& cp, double dE, int side);

// Moves q0 along its gradient line until Delta2 = target.
Momentum2 shift_to_level(const PairBand& band, Momentum2 q0, double target);

// Saddle-line vertex farthest from every saddle image (an off-critical
// incoming pair at E_sadd).
Momentum2 saddle_line_anchor(const PairBand& band, const std::vector<SaddleLine>& lines,
                             const std::vector<CriticalPoint>& saddles);

struct SweepRow {
  double dE = 0.0;
  double E = 0.0;
  SMatrixPoint s;
  PropagatorResult plus;
  CrossSectionRecord photons;                     // alpha = 2, pair with P/2 each
  std::optional<CrossSectionRecord> dark_critical;  // alpha = 0 on the ray into q_crit
  std::optional<CrossSectionRecord> dark_line;      // alpha = 0 from the saddle-line anchor
};

struct SweepSetup {
  double a_alpha = 1.0;
  bool dark_critical = true;
  std::optional<Momentum2> line_anchor;  // saddle points only
};

// One propagator evaluation per offset; rows in the order of `offsets`.
// Parallel over offsets with deterministic output.
std::vector<SweepRow> critical_sweep(const LocalPropagator& lp, const CriticalPoint& cp, int side,
                                     const std::vector<double>& offsets, const SweepSetup& setup);

enum class IncomingKind { photons, dark_off_critical, dark_at_critical };
const char* to_string(IncomingKind k);

// Classification table of sigma_{alpha,beta} near E_max / E_sadd.
ScalingClass reference_class(IncomingKind k, int beta, CriticalKind crit);

}  // namespace arrayscat
