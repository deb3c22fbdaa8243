#include "arrayscat/criticality.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <exception>
#include <sstream>

#include "arrayscat/errors.hpp"

namespace arrayscat {

std::vector<double> log_offsets(double dE_min, double dE_max, int per_decade) {
  if (!(dE_min > 0.0 && dE_max >= dE_min) || per_decade < 1)
    throw DomainError("log offsets: need 0 < dE_min <= dE_max and per_decade >= 1");
  const double decades = std::log10(dE_max / dE_min);
  const int n = static_cast<int>(std::lround(decades * per_decade));
  std::vector<double> out;
  for (int i = 0; i <= n; ++i) out.push_back(n == 0 ? dE_max : dE_max * std::pow(dE_min / dE_max, double(i) / n));
  return out;
}

namespace {

double solve_on_line(const PairBand& band, Momentum2 q0, Momentum2 u, double target, double r_lo, double r_hi) {
  auto g = [&](double r) { return band.delta2(q0 + r * u, false).f - target; };
  double glo = g(r_lo), ghi = g(r_hi);
  for (int k = 0; k < 40 && glo * ghi > 0.0; ++k) {
    r_hi *= 1.5;
    ghi = g(r_hi);
  }
  if (glo * ghi > 0.0) throw ConvergenceError("no bracket for the target energy along the line", std::abs(ghi));
  boost::uintmax_t it = 200;
  const auto [a, c] = boost::math::tools::toms748_solve(g, r_lo, r_hi, glo, ghi,
                                                         boost::math::tools::eps_tolerance<double>(50), it);
  return 0.5 * (a + c);
}

}  // namespace

Momentum2 approach_critical(const PairBand& band, const CriticalPoint& cp, double dE, int side) {
  if (!(dE > 0.0)) throw DomainError("approach_critical: dE must be positive");
  const double lam = side < 0 ? cp.hessian_eigs[0] : cp.hessian_eigs[1];
  if (side * lam <= 0.0) throw DomainError("approach_critical: no direction with that curvature sign");
  const double xx = cp.hessian[0], xy = cp.hessian[1], yy = cp.hessian[2];
  Momentum2 u = std::abs(xy) > 1e-12 * (std::abs(xx) + std::abs(yy))
                    ? Momentum2{lam - yy, xy}
                    : (std::abs(xx - lam) < std::abs(yy - lam) ? Momentum2{1.0, 0.0} : Momentum2{0.0, 1.0});
  u = (1.0 / u.norm()) * u;
  const double r0 = std::sqrt(2.0 * dE / std::abs(lam));
  const double r = solve_on_line(band, cp.q, u, cp.energy + side * dE, 0.05 * r0, 3.0 * r0);
  return cp.q + r * u;
}

Momentum2 shift_to_level(const PairBand& band, Momentum2 q0, double target) {
  const Derivs2 d = band.delta2(q0, false);
  const double gn = d.grad_norm();
  if (!(gn > 0.0)) throw DomainError("shift_to_level: gradient vanishes at the start point");
  const Momentum2 u{d.fx / gn, d.fy / gn};
  const double dr = (target - d.f) / gn;
  if (dr == 0.0) return q0;
  const Momentum2 v = dr > 0.0 ? u : -u;
  const double r = solve_on_line(band, q0, v, target, 0.0, 2.0 * std::abs(dr) + 1e-14);
  return q0 + r * v;
}

Momentum2 saddle_line_anchor(const PairBand& band, const std::vector<SaddleLine>& lines,
                             const std::vector<CriticalPoint>& saddles) {
  std::vector<Momentum2> images;
  for (const auto& s : saddles) {
    const auto orb = s.symmetry_orbit.empty() ? std::vector<Momentum2>{s.q} : s.symmetry_orbit;
    images.insert(images.end(), orb.begin(), orb.end());
  }
  double best = -1.0;
  Momentum2 anchor;
  for (const auto& l : lines) {
    for (const auto& v : l.polyline) {
      double dmin = INFINITY;
      for (const auto& s : images) dmin = std::min(dmin, band.periodic_distance(v, s));
      if (dmin > best) {
        best = dmin;
        anchor = v;
      }
    }
  }
  if (best < 0.0) throw DomainError("saddle_line_anchor: no saddle-line vertices");
  return anchor;
}

std::vector<SweepRow> critical_sweep(const LocalPropagator& lp, const CriticalPoint& cp, int side,
                                     const std::vector<double>& offsets, const SweepSetup& setup) {
  const PairBand& band = lp.band();
  const DispersionModel& model = band.model();
  if (side != -1 && side != 1) throw DomainError("critical_sweep: side must be -1 or +1");
  if (cp.kind == CriticalKind::maximum && side > 0)
    throw DomainError("critical_sweep: no dark states above a band maximum");

  std::vector<SweepRow> rows(offsets.size());
  std::vector<std::exception_ptr> errors(offsets.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    try {
      SweepRow& r = rows[i];
      r.dE = offsets[i];
      r.E = cp.energy + side * r.dE;
      const auto ev = lp.evaluate(r.E);
      r.plus = ev.plus;
      r.s = s_eigenvalue(ev, band.total_momentum(), r.E);
      r.photons = cross_section(IncomingState::photon_pair_symmetric(model, band.total_momentum(), r.E), ev,
                                setup.a_alpha);
      if (setup.dark_critical) {
        auto in = IncomingState::dark_pair_at(band, approach_critical(band, cp, r.dE, side));
        in.E = r.E;  // equal up to root tolerance; keeps the row on one energy
        r.dark_critical = cross_section(in, ev, setup.a_alpha);
      }
      if (setup.line_anchor) {
        auto in = IncomingState::dark_pair_at(band, shift_to_level(band, *setup.line_anchor, r.E));
        in.E = r.E;
        r.dark_line = cross_section(in, ev, setup.a_alpha);
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

const char* to_string(IncomingKind k) {
  switch (k) {
    case IncomingKind::photons: return "photons";
    case IncomingKind::dark_off_critical: return "dark_off_critical_q";
    default: return "dark_at_critical_q";
  }
}

ScalingClass reference_class(IncomingKind k, int beta, CriticalKind crit) {
  if (beta < 0 || beta > 2) throw DomainError("reference_class: beta must be 0, 1 or 2");
  if (crit != CriticalKind::maximum && crit != CriticalKind::saddle)
    throw DomainError("reference_class: only maxima and saddles are classified");
  // |T|^2 ~ log^-2 at both; rho_0 ~ |log| at a saddle, all other rho finite
  const bool log1 = crit == CriticalKind::saddle && beta == 0;
  if (k == IncomingKind::dark_at_critical)
    return log1 ? ScalingClass::inv_dE_log1 : ScalingClass::inv_dE_log2;
  return log1 ? ScalingClass::log1 : ScalingClass::log2;
}

}  // namespace arrayscat
