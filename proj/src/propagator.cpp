#include "arrayscat/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "arrayscat/errors.hpp"
#include "arrayscat/quadrature.hpp"

namespace arrayscat {

namespace {

using Vec7 = quad::Vec<7>;

// Root of g on [lo, hi] given values of opposite sign at the ends.
double bracket_root(const std::function<double(double)>& g, double lo, double hi, double glo, double ghi) {
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  std::uintmax_t iters = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
  return 0.5 * (r.first + r.second);
}

double wrap_into(double y, double lo, double period) {
  y = lo + std::fmod(y - lo, period);
  if (y < lo) y += period;
  if (y >= lo + period) y -= period;
  return y;
}

// Polynomial through (x_i, y_i), evaluated at 0 (Neville).
cplx extrapolate_to_zero(const std::vector<double>& x, std::vector<cplx> y) {
  const std::size_t n = x.size();
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t i = 0; i + m < n; ++i)
      y[i] = (x[i + m] * y[i] - x[i] * y[i + 1]) / (x[i + m] - x[i]);
  return y[0];
}

}  // namespace

int LocalPropagator::Column::root_count() const {
  int n = 0;
  for (const auto& s : segments) n += static_cast<int>(s.roots.size());
  return n;
}

LocalPropagator::LocalPropagator(PairBand band, PropagatorOptions opts) : band_(std::move(band)), opts_(opts) {
  if (opts_.root_samples < 8) throw ConfigError("propagator.root_samples must be >= 8");
  if (opts_.scan_columns < 8) throw ConfigError("propagator.scan_columns must be >= 8");
  const Momentum2 P = band_.total_momentum();
  const Momentum2 c1 = band_.wrap({-0.5 * P.kx, -0.5 * P.ky});
  const Momentum2 c2 = band_.wrap({0.5 * P.kx, 0.5 * P.ky});
  circle_centers_.push_back(c1);
  if (band_.periodic_distance(c1, c2) > 1e-12) circle_centers_.push_back(c2);
  if (opts_.use_critical_points) critical_ = find_critical_points(band_);
}

std::vector<double> LocalPropagator::circle_crossings(double x) const {
  const double b = band_.half_width(), t = 2.0 * b;
  std::vector<double> ys;
  for (const auto& c : circle_centers_) {
    for (int k = -1; k <= 1; ++k) {
      const double dx = x - (c.kx + k * t);
      if (std::abs(dx) >= 1.0) continue;
      const double s = std::sqrt((1.0 - dx) * (1.0 + dx));
      ys.push_back(wrap_into(c.ky - s, -b, t));
      ys.push_back(wrap_into(c.ky + s, -b, t));
    }
  }
  std::sort(ys.begin(), ys.end());
  std::vector<double> out;
  for (double y : ys)
    if (out.empty() || y - out.back() > 1e-14 * b) out.push_back(y);
  return out;
}

void LocalPropagator::find_roots(double x, double E, Segment& s) const {
  auto f = [&](double y) { return band_.delta2({x, y}, false).f - E; };
  auto fy = [&](double y) { return band_.delta2({x, y}, false).fy; };
  const int n = opts_.root_samples;

  // Interior extrema from sign changes of f_y. For a bounded segment the ends
  // are light-cone crossings where Delta2 -> -inf: f_y > 0 leaving a and
  // f_y < 0 approaching c.
  std::vector<double> pos, slope;
  if (s.periodic) {
    const double h = (s.c - s.a) / n;
    for (int k = 0; k <= n; ++k) pos.push_back(s.a + k * h);
  } else {
    const double m = 0.5 * (s.a + s.c), hh = 0.5 * (s.c - s.a);
    pos.push_back(s.a);
    for (int k = 1; k < n; ++k) pos.push_back(m - hh * std::cos(kPi * k / n));
    pos.push_back(s.c);
  }
  slope.resize(pos.size());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    if (!s.periodic && k == 0) {
      slope[k] = 1.0;
    } else if (!s.periodic && k + 1 == pos.size()) {
      slope[k] = -1.0;
    } else if (s.periodic && k + 1 == pos.size()) {
      slope[k] = slope[0];
    } else {
      slope[k] = fy(pos[k]);
    }
  }

  // Approach an end of a bounded segment geometrically until pred holds.
  auto approach = [&](double from, double end, const std::function<bool(double)>& pred, double& out) {
    for (int k = 1; k <= 60; ++k) {
      const double y = end + (from - end) * std::ldexp(1.0, -k);
      if (y == end) break;
      if (pred(y)) {
        out = y;
        return true;
      }
    }
    return false;
  };

  std::vector<double> ext;
  for (std::size_t k = 0; k + 1 < pos.size(); ++k) {
    if ((slope[k] > 0.0) == (slope[k + 1] > 0.0)) continue;
    double lo = pos[k], hi = pos[k + 1];
    double glo = slope[k], ghi = slope[k + 1];
    if (!s.periodic && k == 0) {
      if (!approach(hi, s.a, [&](double y) { return fy(y) > 0.0; }, lo)) continue;
      glo = fy(lo);
    }
    if (!s.periodic && k + 2 == pos.size()) {
      if (!approach(lo, s.c, [&](double y) { return fy(y) < 0.0; }, hi)) continue;
      ghi = fy(hi);
    }
    ext.push_back(bracket_root(fy, lo, hi, glo, ghi));
  }
  s.roots.clear();
  s.slopes.clear();
  s.curvatures.clear();

  if (s.periodic) {
    if (ext.size() < 2) return;
    // re-anchor the window at the first extremum
    const double t = s.c - s.a;
    const double a = ext.front();
    std::vector<double> e = ext;
    e.push_back(a + t);
    std::vector<double> fe(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) fe[i] = (i + 1 == e.size()) ? fe[0] : f(e[i]);
    for (std::size_t i = 0; i + 1 < e.size(); ++i)
      if ((fe[i] > 0.0) != (fe[i + 1] > 0.0)) s.roots.push_back(bracket_root(f, e[i], e[i + 1], fe[i], fe[i + 1]));
    s.a = a;
    s.c = a + t;
  } else {
    std::vector<double> e{s.a};
    e.insert(e.end(), ext.begin(), ext.end());
    e.push_back(s.c);
    std::vector<double> fe(e.size());
    for (std::size_t i = 1; i + 1 < e.size(); ++i) fe[i] = f(e[i]);
    fe.front() = fe.back() = -1.0;  // stands for -inf
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      if ((fe[i] > 0.0) == (fe[i + 1] > 0.0)) continue;
      double lo = e[i], hi = e[i + 1], flo = fe[i], fhi = fe[i + 1];
      if (i == 0) {
        if (!approach(hi, s.a, [&](double y) { return f(y) < 0.0; }, lo)) continue;
        flo = f(lo);
      }
      if (i + 2 == e.size()) {
        if (!approach(lo, s.c, [&](double y) { return f(y) < 0.0; }, hi)) continue;
        fhi = f(hi);
      }
      s.roots.push_back(bracket_root(f, lo, hi, flo, fhi));
    }
  }
  std::sort(s.roots.begin(), s.roots.end());
  for (double r : s.roots) {
    const Derivs2 d = band_.delta2({x, r}, true);
    s.slopes.push_back(d.fy);
    s.curvatures.push_back(d.fyy);
  }
  s.extrema = std::move(ext);
}

LocalPropagator::Column LocalPropagator::analyze(double x, double E) const {
  const double b = band_.half_width(), t = 2.0 * b;
  Column col;
  col.x = x;
  const auto cr = circle_crossings(x);
  if (cr.empty()) {
    Segment s;
    s.a = -b;
    s.c = b;
    s.periodic = true;
    find_roots(x, E, s);
    col.segments.push_back(std::move(s));
    return col;
  }
  std::vector<double> bp = cr;
  bp.push_back(cr.front() + t);
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    Segment s;
    s.a = bp[i];
    s.c = bp[i + 1];
    s.beta = band_.bright_count({x, 0.5 * (s.a + s.c)});
    if (s.beta == 0) find_roots(x, E, s);
    col.segments.push_back(std::move(s));
  }
  return col;
}

std::vector<double> LocalPropagator::outer_breakpoints(double E, bool with_tangencies) const {
  const double b = band_.half_width(), t = 2.0 * b;
  std::vector<double> pts{-b, b};
  auto add = [&](double x) { pts.push_back(wrap_into(x, -b, t)); };
  for (const auto& c : circle_centers_) {
    add(c.kx - 1.0);
    add(c.kx + 1.0);
  }
  // circles of the two constituents cut each other: the segment order changes there
  if (circle_centers_.size() == 2) {
    const Momentum2 c1 = circle_centers_[0];
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) {
        const Momentum2 c2{circle_centers_[1].kx + i * t, circle_centers_[1].ky + j * t};
        const double dx = c2.kx - c1.kx, dy = c2.ky - c1.ky, dist = std::hypot(dx, dy);
        if (dist >= 2.0 || dist < 1e-12) continue;
        const double h = std::sqrt(1.0 - 0.25 * dist * dist);
        const double mx = c1.kx + 0.5 * dx;
        add(mx - h * dy / dist);
        add(mx + h * dy / dist);
      }
  }
  for (const auto& cp : critical_)
    for (const auto& q : cp.symmetry_orbit.empty() ? std::vector<Momentum2>{cp.q} : cp.symmetry_orbit) add(q.kx);
  if (with_tangencies)
    for (double x : contour_tangencies(E)) pts.push_back(x);
  return quad::make_breakpoints(pts, -b, b, 1e-13 * b);
}

std::vector<double> LocalPropagator::contour_tangencies(double E) const {
  const double b = band_.half_width();
  std::vector<double> scan = outer_breakpoints(E, false);
  for (int i = 1; i < opts_.scan_columns; ++i) scan.push_back(-b + 2.0 * b * i / opts_.scan_columns);
  scan = quad::make_breakpoints(scan, -b, b, 1e-9 * b);

  // A vertical tangent is a column extremum of Delta2 passing through E. Two
  // tangencies inside one scan interval leave the root count unchanged, so
  // the extremum values are followed instead: per dark segment, in order.
  struct Probe {
    std::vector<int> shape;      // extrema per dark segment
    std::vector<double> excess;  // Delta2 - E at each extremum
  };
  auto probe = [&](double x) {
    Probe p;
    for (const auto& s : analyze(x, E).segments) {
      if (s.beta > 0) continue;
      p.shape.push_back(static_cast<int>(s.extrema.size()));
      for (double y : s.extrema) p.excess.push_back(band_.delta2({x, y}, false).f - E);
    }
    return p;
  };
  auto crosses = [](const Probe& l, const Probe& r) {
    if (l.shape != r.shape) return true;
    for (std::size_t j = 0; j < l.excess.size(); ++j)
      if ((l.excess[j] > 0.0) != (r.excess[j] > 0.0)) return true;
    return false;
  };

  std::vector<double> out;
  std::function<void(double, const Probe&, double, const Probe&)> refine = [&](double xl, const Probe& pl, double xr,
                                                                               const Probe& pr) {
    if (!crosses(pl, pr)) return;
    if (xr - xl < 1e-12 * b) {
      out.push_back(0.5 * (xl + xr));  // folds of extrema are kept too; they only add a breakpoint
      return;
    }
    const double xm = 0.5 * (xl + xr);
    const Probe pm = probe(xm);
    refine(xl, pl, xm, pm);
    refine(xm, pm, xr, pr);
  };
  for (std::size_t i = 0; i + 1 < scan.size(); ++i) {
    const double d = 1e-9 * (scan[i + 1] - scan[i]);
    const double xl = scan[i] + d, xr = scan[i + 1] - d;
    refine(xl, probe(xl), xr, probe(xr));
  }
  std::sort(out.begin(), out.end());
  return out;
}

LocalPropagator::Evaluation LocalPropagator::evaluate(double E, bool collect_shell) const {
  if (!std::isfinite(E)) throw DomainError("propagator: energy must be finite");
  for (const auto& c : critical_) {
    if (!c.converged || c.kind == CriticalKind::unclassified) continue;
    if (std::abs(E - c.energy) <= 1e-12 * std::max(1.0, std::abs(c.energy)))
      throw DomainError("propagator: E = " + std::to_string(E) + " is a critical energy (" + to_string(c.kind) +
                        "), where L diverges");
  }
  const double b = band_.half_width();
  const double t = 2.0 * b;
  quad::Options inner;
  inner.abs_tol = opts_.inner_abs_tol;
  inner.rel_tol = opts_.inner_rel_tol;
  inner.max_intervals = opts_.inner_max_intervals;

  Evaluation ev;
  // Column integral: [Re L0 (PV), Im L0 (+i0), Re L1, Im L1, Re L2, Im L2, inner error].
  auto column = [&](double x) -> Vec7 {
    ++ev.columns;
    const Column col = analyze(x, E);
    Vec7 out{};
    for (const auto& s : col.segments) {
      std::vector<double> bp{s.a, s.c};
      for (double r : s.roots) bp.push_back(s.periodic ? wrap_into(r, s.a, t) : r);
      for (double r : s.extrema) bp.push_back(s.periodic ? wrap_into(r, s.a, t) : r);
      bp = quad::make_breakpoints(bp, s.a, s.c, 1e-14 * b);
      if (s.beta > 0) {
        auto g = [&](double y) {
          const cplx v = 1.0 / (E - band_.eps2({x, y}).value());
          return quad::Vec<2>{v.real(), v.imag()};
        };
        const auto r = quad::integrate<2>(g, bp, inner);
        out[2 * s.beta] += r.value[0];
        out[2 * s.beta + 1] += r.value[1];
        out[6] += r.error;
        continue;
      }
      const auto& rr = s.roots;
      const auto& ss = s.slopes;
      // Rounding in Delta2 is amplified as eps/(f' dy)^2 next to a root, so a
      // small core around each root uses the limit f''/(2 f'^2) of the
      // subtracted pole instead.
      std::vector<double> core(rr.size());
      for (std::size_t k = 0; k < rr.size(); ++k) {
        core[k] = 1e-4;
        if (s.curvatures[k] != 0.0) core[k] = std::min(core[k], 0.1 * std::abs(ss[k] / s.curvatures[k]));
        for (double sign : {-1.0, 1.0}) {
          const double y = rr[k] + sign * core[k];
          bp.push_back(s.periodic ? wrap_into(y, s.a, t) : y);
        }
      }
      bp = quad::make_breakpoints(bp, s.a, s.c, 1e-14 * b);
      auto kernel = [&](std::size_t k, double y) {
        if (s.periodic) return (kPi / t) / (ss[k] * std::tan(kPi * (y - rr[k]) / t));
        return 1.0 / (ss[k] * (y - rr[k]));
      };
      auto g = [&](double y) {
        std::size_t near = rr.size();
        for (std::size_t k = 0; k < rr.size(); ++k) {
          double dy = y - rr[k];
          if (s.periodic) dy -= t * std::round(dy / t);
          if (std::abs(dy) < core[k]) near = k;
        }
        double v = near < rr.size() ? s.curvatures[near] / (2.0 * ss[near] * ss[near])
                                    : 1.0 / (E - band_.delta2({x, y}, false).f);
        for (std::size_t k = 0; k < rr.size(); ++k)
          if (k != near) v += kernel(k, y);
        return quad::Vec<1>{v};
      };
      const auto r = quad::integrate<1>(g, bp, inner);
      double pv = r.value[0];
      double im = 0.0;
      for (std::size_t k = 0; k < rr.size(); ++k) {
        if (!s.periodic) pv -= std::log(std::abs((s.c - rr[k]) / (s.a - rr[k]))) / ss[k];
        im -= kPi / std::abs(ss[k]);
      }
      out[0] += pv;
      out[1] += im;
      out[6] += r.error;
    }
    return out;
  };

  const auto bp = outer_breakpoints(E, true);
  quad::Options outer;
  outer.abs_tol = opts_.abs_tol;
  outer.rel_tol = opts_.rel_tol;
  outer.max_intervals = opts_.max_intervals;
  const auto res = quad::integrate<7>(column, bp, outer);
  if (!res.converged) {
    std::ostringstream os;
    os << "propagator quadrature did not converge at E = " << E << "; worst column interval near x = "
       << bp[res.worst.segment] << ".." << bp[res.worst.segment + 1] << " (error " << res.worst.error << ")";
    throw ConvergenceError(os.str(), res.error);
  }

  const auto& v = res.value;
  PropagatorResult plus;
  plus.side = Side::plus_i0;
  plus.L_by_domain = {0.5 * cplx{v[0], v[1]}, 0.5 * cplx{v[2], v[3]}, 0.5 * cplx{v[4], v[5]}};
  plus.L = plus.L_by_domain[0] + plus.L_by_domain[1] + plus.L_by_domain[2];
  plus.error_estimate = 0.5 * (res.error + v[6]);
  PropagatorResult minus = plus;
  minus.side = Side::minus_i0;
  minus.L_by_domain[0] = std::conj(plus.L_by_domain[0]);
  minus.L = minus.L_by_domain[0] + minus.L_by_domain[1] + minus.L_by_domain[2];
  ev.plus = plus;
  ev.minus = minus;

  if (collect_shell) {
    for (const auto& iv : res.intervals) {
      for (const auto& [x, w] : quad::interval_nodes(bp, iv)) {
        const Column col = analyze(x, E);
        for (const auto& s : col.segments) {
          for (std::size_t k = 0; k < s.roots.size(); ++k) {
            const Momentum2 q{x, wrap_into(s.roots[k], -b, t)};
            const Derivs2 d = band_.delta2(q, false);
            ShellNode node;
            node.q = q;
            node.speed = d.grad_norm();
            node.measure = w / std::abs(s.slopes[k]);
            node.dl = node.measure * node.speed;
            ev.shell.push_back(node);
          }
        }
      }
    }
  }
  return ev;
}

PropagatorResult LocalPropagator::operator()(double E, Side side) const {
  auto ev = evaluate(E);
  return side == Side::plus_i0 ? ev.plus : ev.minus;
}

double LocalPropagator::dark_dos(double E) const { return -evaluate(E).plus.L_by_domain[0].imag() / kPi; }

std::array<cplx, 3> LocalPropagator::at_eta(double E, double eta, double* error) const {
  const double b = band_.half_width();
  const double t = 2.0 * b;
  const cplx z{E, eta};
  quad::Options inner;
  inner.abs_tol = opts_.inner_abs_tol;
  inner.rel_tol = opts_.inner_rel_tol;
  inner.max_intervals = 20 * opts_.inner_max_intervals;
  auto column = [&](double x) -> quad::Vec<6> {
    const Column col = analyze(x, E);
    quad::Vec<6> out{};
    for (const auto& s : col.segments) {
      std::vector<double> bp{s.a, s.c};
      for (double r : s.roots) bp.push_back(s.periodic ? wrap_into(r, s.a, t) : r);
      bp = quad::make_breakpoints(bp, s.a, s.c, 1e-14 * b);
      auto g = [&](double y) {
        const cplx v = 1.0 / (z - band_.eps2({x, y}).value());
        return quad::Vec<2>{v.real(), v.imag()};
      };
      const auto r = quad::integrate<2>(g, bp, inner);
      out[2 * s.beta] += r.value[0];
      out[2 * s.beta + 1] += r.value[1];
    }
    return out;
  };
  const auto bp = outer_breakpoints(E, true);
  quad::Options outer;
  outer.abs_tol = opts_.abs_tol;
  outer.rel_tol = opts_.rel_tol;
  outer.max_intervals = 5 * opts_.max_intervals;
  const auto res = quad::integrate<6>(column, bp, outer);
  if (!res.converged) throw ConvergenceError("eta-broadened propagator did not converge", res.error);
  if (error) *error = 0.5 * res.error;
  const auto& v = res.value;
  return {0.5 * cplx{v[0], v[1]}, 0.5 * cplx{v[2], v[3]}, 0.5 * cplx{v[4], v[5]}};
}

PropagatorResult LocalPropagator::evaluate_eta(double E, Side side, std::span<const double> etas) const {
  if (etas.empty()) throw ConfigError("eta sequence must not be empty");
  std::vector<double> x;
  std::array<std::vector<cplx>, 3> y;
  double err = 0.0;
  for (double eta : etas) {
    if (!(eta > 0.0)) throw ConfigError("eta values must be positive");
    double e = 0.0;
    const auto v = at_eta(E, side == Side::plus_i0 ? eta : -eta, &e);
    for (int k = 0; k < 3; ++k) y[k].push_back(v[k]);
    x.push_back(eta);
    err = std::max(err, e);
  }
  PropagatorResult r;
  r.side = side;
  r.eta_used.assign(etas.begin(), etas.end());
  double spread = 0.0;
  for (int k = 0; k < 3; ++k) {
    r.L_by_domain[k] = extrapolate_to_zero(x, y[k]);
    // difference to the extrapolant without the smallest eta
    if (x.size() >= 2) {
      std::vector<double> xs(x.begin(), x.end() - 1);
      std::vector<cplx> ys(y[k].begin(), y[k].end() - 1);
      spread += std::abs(r.L_by_domain[k] - extrapolate_to_zero(xs, ys));
    }
  }
  r.L = r.L_by_domain[0] + r.L_by_domain[1] + r.L_by_domain[2];
  r.error_estimate = err + spread;
  return r;
}

}  // namespace arrayscat
