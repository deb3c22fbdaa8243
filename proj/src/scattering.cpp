#include "arrayscat/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "arrayscat/errors.hpp"

namespace arrayscat {

cplx t_matrix(const PropagatorResult& plus, double tol) {
  if (std::abs(plus.L) < tol) {
    std::ostringstream os;
    os << "|L(E + i0)| = " << std::abs(plus.L) << " is below " << tol << "; T-matrix is singular";
    throw SingularTMatrixError(os.str());
  }
  return -1.0 / plus.L;
}

SMatrixPoint s_eigenvalue(const LocalPropagator::Evaluation& ev, Momentum2 P, double E) {
  SMatrixPoint out;
  out.P = P;
  out.E = E;
  if (std::abs(ev.plus.L) == 0.0) throw SingularTMatrixError("s-matrix eigenvalue: L(E + i0) vanishes");
  out.s = ev.minus.L / ev.plus.L;
  out.magnitude2 = std::norm(out.s);
  out.phase = std::arg(out.s);
  if (out.phase == -kPi) out.phase = kPi;
  out.trivial = ev.plus.L_by_domain[0].imag() == 0.0;
  // first-order propagation of the quadrature error of both sides
  out.error_estimate = 2.0 * ev.plus.error_estimate / std::abs(ev.plus.L) * std::abs(out.s);
  return out;
}

SMatrixPoint s_eigenvalue(const LocalPropagator& lp, double E) {
  return s_eigenvalue(lp.evaluate(E), lp.band().total_momentum(), E);
}

std::vector<EigenWeight> eigenvector_weights(const PairBand& band, const std::vector<ShellNode>& shell) {
  std::vector<EigenWeight> out;
  double rho = 0.0;
  for (const auto& n : shell) {
    const Momentum2 c = band.canonical(n.q);
    if (std::abs(c.kx - n.q.kx) > 1e-12 || std::abs(c.ky - n.q.ky) > 1e-12) continue;
    if (!(n.speed > 0.0)) continue;
    out.push_back({n.q, n.dl, 0.0, n.speed});
    rho += n.dl / n.speed;
  }
  if (out.empty() || !(rho > 0.0)) throw DomainError("eigenvector weights: the dark on-shell contour is empty");
  for (auto& w : out) w.weight = 1.0 / std::sqrt(rho * w.speed);
  return out;
}

std::vector<EigenWeight> eigenvector_weights(const LocalPropagator& lp, double E) {
  return eigenvector_weights(lp.band(), lp.evaluate(E, true).shell);
}

namespace {

Vec3 unit_wavevector(const Photon& ph, double& norm) {
  if (!(ph.chi > 0.0)) throw DomainError("photon: chi must be positive");
  if (!(ph.p.norm() < 1.0)) throw DomainError("photon: in-plane momentum must lie inside the light cone");
  if (ph.direction != 1 && ph.direction != -1) throw DomainError("photon: direction must be +1 or -1");
  norm = std::sqrt(ph.p.norm2() + ph.chi * ph.chi);
  return {ph.p.kx / norm, ph.p.ky / norm, ph.direction * ph.chi / norm};
}

}  // namespace

IncomingState IncomingState::dark_pair(const DispersionModel& model, Momentum2 p1, Momentum2 p2) {
  const auto& spec = model.spec();
  if (!is_dark(reduce_to_bz(spec, p1)) || !is_dark(reduce_to_bz(spec, p2)))
    throw DomainError("dark pair: both momenta must lie outside the light cone");
  IncomingState in;
  in.alpha = 0;
  in.P = reduce_to_bz(spec, p1 + p2);
  in.q = p1 - 0.5 * in.P;
  in.E = model.delta(p1) + model.delta(p2);
  const Derivs2 d1 = model.delta_derivs(p1, false), d2 = model.delta_derivs(p2, false);
  in.v_g = std::hypot(d1.fx - d2.fx, d1.fy - d2.fy);
  in.dark = {p1, p2};
  return in;
}

IncomingState IncomingState::dark_pair_at(const PairBand& band, Momentum2 q) {
  if (band.bright_count(q) != 0) throw DomainError("dark pair: both constituents must lie outside the light cone");
  IncomingState in;
  in.alpha = 0;
  in.P = band.total_momentum();
  in.q = q;
  in.E = band.eps2(q).re;
  in.v_g = band.group_velocity(q).speed;
  in.dark = {band.p1(q), band.p2(q)};
  return in;
}

IncomingState IncomingState::photon_pair(const DispersionModel& model, Photon a, Photon b) {
  const auto& spec = model.spec();
  double na = 0.0, nb = 0.0;
  const Vec3 ka = unit_wavevector(a, na), kb = unit_wavevector(b, nb);
  IncomingState in;
  in.alpha = 2;
  in.P = reduce_to_bz(spec, a.p + b.p);
  in.E = spec.omega_eg_over_gamma0 * ((na - 1.0) + (nb - 1.0));
  in.v_g = std::sqrt((ka[0] - kb[0]) * (ka[0] - kb[0]) + (ka[1] - kb[1]) * (ka[1] - kb[1]) +
                     (ka[2] - kb[2]) * (ka[2] - kb[2]));
  in.photons = {a, b};
  return in;
}

IncomingState IncomingState::photon_pair_symmetric(const DispersionModel& model, Momentum2 P, double E) {
  const Momentum2 p = 0.5 * P;
  const double k = 1.0 + E / (2.0 * model.spec().omega_eg_over_gamma0);
  if (!(k > p.norm())) throw DomainError("photon pair: in-plane momentum P/2 must lie inside the light cone");
  const double chi = std::sqrt((k - p.norm()) * (k + p.norm()));
  IncomingState in = photon_pair(model, Photon{p, chi, -1}, Photon{p, chi, 1});
  in.E = E;  // exact by construction; avoids rounding through omega_eg
  return in;
}

IncomingState IncomingState::photon_dark(const DispersionModel& model, Photon a, Momentum2 p_dark) {
  const auto& spec = model.spec();
  if (!is_dark(reduce_to_bz(spec, p_dark))) throw DomainError("photon + dark wave: p_dark must be dark");
  double na = 0.0;
  const Vec3 ka = unit_wavevector(a, na);
  const Derivs2 d = model.delta_derivs(p_dark, false);
  const double w = spec.omega_eg_over_gamma0;
  IncomingState in;
  in.alpha = 1;
  in.P = reduce_to_bz(spec, a.p + p_dark);
  in.E = w * (na - 1.0) + model.delta(p_dark);
  const double vx = ka[0] - d.fx / w, vy = ka[1] - d.fy / w, vz = ka[2];
  in.v_g = std::sqrt(vx * vx + vy * vy + vz * vz);
  in.photons = {a};
  in.dark = {p_dark};
  return in;
}

const char* to_string(ScalingClass c) {
  switch (c) {
    case ScalingClass::inv_dE_log1: return "dE^-1 log^-1";
    case ScalingClass::inv_dE_log2: return "dE^-1 log^-2";
    case ScalingClass::inv_sqrt_dE_log1: return "dE^-1/2 log^-1";
    case ScalingClass::inv_sqrt_dE_log2: return "dE^-1/2 log^-2";
    case ScalingClass::log1: return "log^-1";
    default: return "log^-2";
  }
}

std::pair<double, double> exponents(ScalingClass c) {
  switch (c) {
    case ScalingClass::inv_dE_log1: return {-1.0, -1.0};
    case ScalingClass::inv_dE_log2: return {-1.0, -2.0};
    case ScalingClass::inv_sqrt_dE_log1: return {-0.5, -1.0};
    case ScalingClass::inv_sqrt_dE_log2: return {-0.5, -2.0};
    case ScalingClass::log1: return {0.0, -1.0};
    default: return {0.0, -2.0};
  }
}

CrossSectionRecord cross_section(const IncomingState& in, const LocalPropagator::Evaluation& ev, double a_alpha) {
  CrossSectionRecord rec;
  rec.incoming = in;
  for (int b = 0; b < 3; ++b) rec.rho[b] = std::max(0.0, -ev.plus.L_by_domain[b].imag() / kPi);
  const double rho_tot = rec.rho[0] + rec.rho[1] + rec.rho[2];
  rec.t2 = std::norm(t_matrix(ev.plus));
  if (rho_tot > 0.0)
    for (int b = 0; b < 3; ++b) rec.branching[b] = rec.rho[b] / rho_tot;
  if (in.alpha == 0 && rec.rho[0] > 0.0 && in.v_g > 0.0) rec.eigen_density = 1.0 / (rec.rho[0] * in.v_g);
  if (!(in.v_g > 1e-14)) {
    rec.divergent = true;
    rec.divergence_note = "incoming relative group velocity vanishes (critical point)";
    for (int b = 0; b < 3; ++b) rec.sigma[b] = rec.rho[b] > 0.0 ? INFINITY : 0.0;
    rec.sigma_tot = rho_tot > 0.0 ? INFINITY : 0.0;
    return rec;
  }
  const double pref = 4.0 * kPi * a_alpha * rec.t2 / in.v_g;
  for (int b = 0; b < 3; ++b) rec.sigma[b] = pref * rec.rho[b];
  rec.sigma_tot = rec.sigma[0] + rec.sigma[1] + rec.sigma[2];
  return rec;
}

CrossSectionRecord cross_section(const IncomingState& in, const LocalPropagator& lp, double a_alpha) {
  if (lp.band().periodic_distance(in.P, lp.band().total_momentum()) > 1e-9)
    throw DomainError("cross section: incoming total momentum differs from the propagator's P");
  return cross_section(in, lp.evaluate(in.E), a_alpha);
}

namespace {

struct LinFit {
  double r2 = -INFINITY;
  double slope = 0.0;
};

// R^2 of y - b z ~ A (slope fixed at a) or ~ A + a x (free slope).
LinFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& z, double a,
                double b, bool free_slope) {
  const std::size_t n = x.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - b * z[i] - (free_slope ? 0.0 : a * x[i]);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sst = 0.0;
  for (double v : y) sst += (v - my) * (v - my);
  LinFit out;
  double ssr = 0.0;
  if (free_slope) {
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double mr = std::accumulate(r.begin(), r.end(), 0.0) / n;
    double sxx = 0.0, sxr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxr += (x[i] - mx) * (r[i] - mr);
    }
    out.slope = sxr / sxx;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = r[i] - mr - out.slope * (x[i] - mx);
      ssr += e * e;
    }
  } else {
    const double mr = std::accumulate(r.begin(), r.end(), 0.0) / n;
    out.slope = a;
    for (double v : r) ssr += (v - mr) * (v - mr);
  }
  out.r2 = sst > 0.0 ? 1.0 - ssr / sst : (ssr == 0.0 ? 1.0 : -INFINITY);
  return out;
}

// Maximizes fit quality over log(kappa): coarse scan, then golden section.
template <class F>
std::pair<double, LinFit> best_scale(double lo, double hi, F&& fit) {
  const int n = 200;
  double best_t = lo;
  LinFit best = fit(lo);
  for (int i = 1; i <= n; ++i) {
    const double t = lo + (hi - lo) * i / n;
    const LinFit f = fit(t);
    if (f.r2 > best.r2) {
      best = f;
      best_t = t;
    }
  }
  double a = std::max(lo, best_t - (hi - lo) / n), c = std::min(hi, best_t + (hi - lo) / n);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double t1 = c - g * (c - a), t2 = a + g * (c - a);
    if (fit(t1).r2 > fit(t2).r2) c = t2;
    else a = t1;
  }
  const double t = 0.5 * (a + c);
  const LinFit f = fit(t);
  if (f.r2 > best.r2) return {t, f};
  return {best_t, best};
}

}  // namespace

ScalingFit scaling_fit(std::span<const double> dE, std::span<const double> y, const ScalingFitOptions& opts) {
  if (dE.size() != y.size() || dE.size() < 4) throw DomainError("scaling fit: need >= 4 matching samples");
  double lo = INFINITY, hi = 0.0;
  for (std::size_t i = 0; i < dE.size(); ++i) {
    if (!(dE[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i]))
      throw DomainError("scaling fit: samples must be positive and finite");
    lo = std::min(lo, dE[i]);
    hi = std::max(hi, dE[i]);
  }
  if (hi / lo < 99.9) throw DomainError("scaling fit: window must span at least two decades of dE");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < dE.size(); ++i) {
    lx.push_back(std::log(dE[i]));
    ly.push_back(std::log(y[i]));
  }
  const double tlo = std::log(opts.min_log_scale > 0.0 ? opts.min_log_scale : std::exp(1.0) * hi);
  const double thi = std::log(opts.max_log_scale);
  if (!(thi > tlo)) throw DomainError("scaling fit: empty log-scale range");
  auto loglog = [&](double t) {
    std::vector<double> z(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) z[i] = std::log(std::abs(lx[i] - t));
    return z;
  };

  ScalingFit out;
  for (ScalingClass c : opts.candidates) {
    const auto [a, b] = exponents(c);
    const auto [t, f] = best_scale(tlo, thi, [&](double tt) { return fit_line(lx, ly, loglog(tt), a, b, false); });
    out.ranking.push_back({c, f.r2, std::exp(t)});
  }
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const ClassScore& l, const ClassScore& r) { return l.r2 > r.r2; });
  out.fitted_class = out.ranking.front().cls;
  out.r2 = out.ranking.front().r2;
  out.log_scale = out.ranking.front().log_scale;
  out.ambiguous = out.ranking.size() > 1 && out.ranking[0].r2 - out.ranking[1].r2 < opts.ambiguity;

  const double b = exponents(out.fitted_class).second;
  const auto [t, f] = best_scale(tlo, thi, [&](double tt) { return fit_line(lx, ly, loglog(tt), 0.0, b, true); });
  (void)t;
  out.measured_power = f.slope;
  out.measured_power_r2 = f.r2;
  return out;
}

}  // namespace arrayscat
