#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <vector>

#include "arrayscat/types.hpp"

// Adaptive Gauss-Kronrod (7/15) quadrature for vector-valued integrands.
//
// Each segment between consecutive breakpoints is optionally mapped by
// x = m - h cos(theta), which turns inverse-square-root endpoint singularities
// and square-root endpoint cusps into smooth integrands. Subdivision always
// bisects the interval with the largest error estimate; the sequence of
// operations depends only on the integrand, so results are reproducible.
namespace arrayscat::quad {

template <std::size_t N>
using Vec = std::array<double, N>;

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-9;
  int max_intervals = 4000;
  bool endpoint_substitution = true;
};

struct Interval {
  int segment = 0;
  double lo = 0.0;  // in the substituted variable
  double hi = 0.0;
  double error = 0.0;
};

template <std::size_t N>
struct Result {
  Vec<N> value{};
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
  Interval worst{};                  // interval with the largest remaining error
  std::vector<Interval> intervals;   // final partition (for node extraction)
};

namespace detail {

inline constexpr std::array<double, 8> kXgk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kWgk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
double max_abs(const Vec<N>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Segment {
  double a, b;
  bool substituted;
  // maps the integration variable t to (x, dx/dt)
  // A node that rounds onto an end point gets zero weight, so integrands are
  // never evaluated exactly at a breakpoint.
  std::pair<double, double> map(double t) const {
    if (!substituted) return {t, 1.0};
    const double h = 0.5 * (b - a);
    double x;
    if (t < 0.5 * kPi) {
      const double s = std::sin(0.5 * t);
      x = a + 2.0 * h * s * s;
    } else {
      const double s = std::sin(0.5 * (kPi - t));
      x = b - 2.0 * h * s * s;
    }
    if (!(x > a && x < b)) return {x, 0.0};
    return {x, h * std::sin(t)};
  }
  double t_lo() const { return substituted ? 0.0 : a; }
  double t_hi() const { return substituted ? kPi : b; }
};

template <std::size_t N, class F>
std::pair<Vec<N>, double> kronrod(F& f, const Segment& seg, double lo, double hi) {
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  Vec<N> k{}, g{};
  auto accumulate = [&](double t, double wk, double wg) {
    const auto [x, jac] = seg.map(t);
    if (jac == 0.0) return;
    const Vec<N> y = f(x);
    for (std::size_t i = 0; i < N; ++i) {
      k[i] += wk * jac * y[i];
      g[i] += wg * jac * y[i];
    }
  };
  accumulate(c, kWgk[7], kWg[3]);
  for (int j = 0; j < 7; ++j) {
    const double wg = (j % 2 == 1) ? kWg[j / 2] : 0.0;
    accumulate(c - h * kXgk[j], kWgk[j], wg);
    accumulate(c + h * kXgk[j], kWgk[j], wg);
  }
  double err = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    k[i] *= h;
    g[i] *= h;
    err = std::max(err, std::abs(k[i] - g[i]));
  }
  return {k, err};
}

}  // namespace detail

// Integrates f over [bp.front(), bp.back()] split at the given (sorted)
// breakpoints.
template <std::size_t N, class F>
Result<N> integrate(F&& f, std::span<const double> bp, const Options& opt = {}) {
  struct Node {
    detail::Segment seg;
    double lo, hi;
    Vec<N> value;
    double error;
    int segment;
  };
  std::vector<Node> nodes;
  auto cmp = [&](int l, int r) { return nodes[l].error < nodes[r].error; };
  std::priority_queue<int, std::vector<int>, decltype(cmp)> heap(cmp);
  Result<N> res;

  auto push = [&](const detail::Segment& seg, int s, double lo, double hi) {
    auto [v, e] = detail::kronrod<N>(f, seg, lo, hi);
    res.evaluations += 15;
    nodes.push_back({seg, lo, hi, v, e, s});
    heap.push(static_cast<int>(nodes.size()) - 1);
  };
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    if (!(bp[s + 1] > bp[s])) continue;
    const detail::Segment seg{bp[s], bp[s + 1], opt.endpoint_substitution};
    push(seg, static_cast<int>(s), seg.t_lo(), seg.t_hi());
  }

  // Leaves are tracked through `alive`; totals are recomputed in creation
  // order so the summation sequence is fixed.
  std::vector<char> alive(nodes.size(), 1);
  auto totals = [&]() {
    Vec<N> v{};
    double e = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (alive[i]) {
        for (std::size_t k = 0; k < N; ++k) v[k] += nodes[i].value[k];
        e += nodes[i].error;
      }
    return std::pair{v, e};
  };
  auto [value, error] = totals();
  int leaves = static_cast<int>(nodes.size());
  while (!heap.empty() && error > std::max(opt.abs_tol, opt.rel_tol * detail::max_abs<N>(value))) {
    if (leaves >= opt.max_intervals) {
      res.converged = false;
      break;
    }
    const int top = heap.top();
    heap.pop();
    const Node parent = nodes[top];
    alive[top] = 0;
    const double mid = 0.5 * (parent.lo + parent.hi);
    if (!(mid > parent.lo && mid < parent.hi)) {
      res.converged = false;
      break;
    }
    push(parent.seg, parent.segment, parent.lo, mid);
    push(parent.seg, parent.segment, mid, parent.hi);
    alive.resize(nodes.size(), 1);
    ++leaves;
    for (std::size_t k = 0; k < N; ++k)
      value[k] += nodes[nodes.size() - 1].value[k] + nodes[nodes.size() - 2].value[k] - parent.value[k];
    error += nodes[nodes.size() - 1].error + nodes[nodes.size() - 2].error - parent.error;
  }
  std::tie(res.value, res.error) = totals();
  double worst = -1.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!alive[i]) continue;
    const auto& n = nodes[i];
    Interval iv{n.segment, n.lo, n.hi, n.error};
    res.intervals.push_back(iv);
    if (n.error > worst) {
      worst = n.error;
      res.worst = iv;
    }
  }
  return res;
}

// Kronrod nodes (x, weight including the substitution Jacobian) of one final
// interval, for reusing the adaptive partition as a discretization.
inline std::vector<std::pair<double, double>> interval_nodes(std::span<const double> bp, const Interval& iv,
                                                             bool substituted = true) {
  const detail::Segment seg{bp[iv.segment], bp[iv.segment + 1], substituted};
  const double c = 0.5 * (iv.lo + iv.hi), h = 0.5 * (iv.hi - iv.lo);
  std::vector<std::pair<double, double>> out;
  auto add = [&](double t, double w) {
    const auto [x, jac] = seg.map(t);
    if (jac != 0.0) out.emplace_back(x, w * h * jac);
  };
  add(c, detail::kWgk[7]);
  for (int j = 0; j < 7; ++j) {
    add(c - h * detail::kXgk[j], detail::kWgk[j]);
    add(c + h * detail::kXgk[j], detail::kWgk[j]);
  }
  return out;
}

// Sorted, de-duplicated breakpoint list clipped to [lo, hi].
inline std::vector<double> make_breakpoints(std::vector<double> pts, double lo, double hi,
                                            double min_gap = 0.0) {
  pts.push_back(lo);
  pts.push_back(hi);
  std::vector<double> in;
  for (double x : pts)
    if (x >= lo && x <= hi) in.push_back(x);
  std::sort(in.begin(), in.end());
  std::vector<double> out;
  for (double x : in)
    if (out.empty() || x - out.back() > min_gap) out.push_back(x);
  if (out.back() != hi) out.back() = hi;
  return out;
}

}  // namespace arrayscat::quad
