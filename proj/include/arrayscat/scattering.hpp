#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arrayscat/propagator.hpp"

namespace arrayscat {

// Atomic T-matrix -1/L(P, E + i0). Throws SingularTMatrixError when |L| is
// below `tol` (a possible bound-state pole).
cplx t_matrix(const PropagatorResult& plus, double tol = 1e-12);

struct SMatrixPoint {
  Momentum2 P;
  double E = 0.0;
  cplx s{1.0, 0.0};
  double magnitude2 = 1.0;
  double phase = 0.0;    // (-pi, pi]
  bool trivial = false;  // no dark on-shell states: s = 1 identically
  double error_estimate = 0.0;
};

SMatrixPoint s_eigenvalue(const LocalPropagator::Evaluation& ev, Momentum2 P, double E);
SMatrixPoint s_eigenvalue(const LocalPropagator& lp, double E);

// Eigenvector of the non-trivial S-matrix eigenvalue on the dark shell,
// w(q) = N / sqrt(v_g(q)), restricted to canonical q (one of each +-q pair)
// and normalized so that sum w^2 dl = 1.
struct EigenWeight {
  Momentum2 q;
  double dl = 0.0;
  double weight = 0.0;
  double speed = 0.0;
};
std::vector<EigenWeight> eigenvector_weights(const LocalPropagator& lp, double E);
std::vector<EigenWeight> eigenvector_weights(const PairBand& band, const std::vector<ShellNode>& shell);

struct Photon {
  Momentum2 p;     // in-plane wavevector, |p| < k0
  double chi = 1;  // out-of-plane magnitude, > 0
  int direction = -1;  // sign of the z-component of the wavevector
};

// Incoming two-excitation state of channel alpha (number of photons).
struct IncomingState {
  int alpha = 0;
  Momentum2 P;            // in-plane total momentum, reduced to the zone
  double E = 0.0;         // rotating-frame energy, Gamma0
  double v_g = 0.0;       // relative speed (alpha = 0: Gamma0/k0; otherwise units of c)
  Momentum2 q;            // relative momentum (alpha = 0)
  std::vector<Momentum2> dark;     // dark constituents
  std::vector<Photon> photons;

  static IncomingState dark_pair(const DispersionModel& model, Momentum2 p1, Momentum2 p2);
  static IncomingState dark_pair_at(const PairBand& band, Momentum2 q);
  static IncomingState photon_pair(const DispersionModel& model, Photon a, Photon b);
  // Counter-propagating photons sharing the energy E, each with in-plane
  // momentum P/2 (|P/2| < k0).
  static IncomingState photon_pair_symmetric(const DispersionModel& model, Momentum2 P, double E);
  static IncomingState photon_pair_normal(const DispersionModel& model, double E) {
    return photon_pair_symmetric(model, {}, E);
  }
  static IncomingState photon_dark(const DispersionModel& model, Photon a, Momentum2 p_dark);
};

enum class ScalingClass { inv_dE_log1, inv_dE_log2, inv_sqrt_dE_log1, inv_sqrt_dE_log2, log1, log2 };
const char* to_string(ScalingClass c);
// (power of dE, power of |log dE|)
std::pair<double, double> exponents(ScalingClass c);

struct CrossSectionRecord {
  IncomingState incoming;
  std::array<double, 3> sigma{};  // by beta, a_alpha = 1 unless given
  double sigma_tot = 0.0;
  std::array<double, 3> branching{};
  double t2 = 0.0;                // |T|^2
  std::array<double, 3> rho{};    // -Im L_beta(E + i0) / pi
  bool divergent = false;         // v_g = 0
  std::string divergence_note;
  double eigen_density = 0.0;     // |w(q)|^2 of the eigenvector at the incoming q (alpha = 0)
};

CrossSectionRecord cross_section(const IncomingState& in, const LocalPropagator::Evaluation& ev,
                                 double a_alpha = 1.0);
CrossSectionRecord cross_section(const IncomingState& in, const LocalPropagator& lp, double a_alpha = 1.0);

struct ClassScore {
  ScalingClass cls;
  double r2 = 0.0;
  double log_scale = 1.0;  // kappa in log(dE / kappa)
};

struct ScalingFit {
  ScalingClass fitted_class = ScalingClass::log2;
  double r2 = 0.0;
  bool ambiguous = false;
  std::vector<ClassScore> ranking;  // best first
  double measured_power = 0.0;      // free fit of the dE exponent, log power of the best class held
  double measured_power_r2 = 0.0;
  double log_scale = 1.0;
};

struct ScalingFitOptions {
  double ambiguity = 0.005;
  double min_log_scale = 0.0;  // 0: e * max(dE)
  double max_log_scale = 100.0;
  std::vector<ScalingClass> candidates{ScalingClass::inv_dE_log1,      ScalingClass::inv_dE_log2,
                                       ScalingClass::inv_sqrt_dE_log1, ScalingClass::inv_sqrt_dE_log2,
                                       ScalingClass::log1,             ScalingClass::log2};
};

// Model selection of y ~ C dE^a |log(dE / kappa)|^b over the candidate classes,
// with C and the log scale kappa fitted per class.
ScalingFit scaling_fit(std::span<const double> dE, std::span<const double> y, const ScalingFitOptions& opts = {});

}  // namespace arrayscat
