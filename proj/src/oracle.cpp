#include "arrayscat/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "arrayscat/errors.hpp"
#include "arrayscat/green.hpp"

namespace arrayscat::oracle {

void OracleConfig::validate() const {
  if (grid_n < 64) throw ConfigError("oracle.grid_n must be >= 64");
  if (eta_sequence.empty()) throw ConfigError("oracle.eta_sequence must not be empty");
  for (std::size_t i = 0; i < eta_sequence.size(); ++i) {
    if (!(eta_sequence[i] > 0.0)) throw ConfigError("oracle.eta_sequence entries must be positive");
    if (i > 0 && !(eta_sequence[i] < eta_sequence[i - 1]))
      throw ConfigError("oracle.eta_sequence must be strictly decreasing");
  }
  if (realspace_cutoff < 1) throw ConfigError("oracle.realspace_cutoff must be positive");
}

namespace {

// Neville table at x = 0; returns the value and the successive corrections
// along the final diagonal.
cplx neville(const std::vector<double>& x, const std::vector<cplx>& y, std::vector<double>* corrections) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n) throw DomainError("extrapolation needs matching, non-empty samples");
  std::vector<cplx> p = y;
  if (corrections) corrections->clear();
  for (std::size_t k = 1; k < n; ++k) {
    const cplx before = p[n - k];
    for (std::size_t i = 0; i + k < n; ++i) p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i]);
    if (corrections) corrections->push_back(std::abs(p[n - k - 1] - before));
  }
  return p[0];
}

bool decreasing(const std::vector<double>& c) {
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] > c[i - 1]) return false;
  return true;
}

}  // namespace

cplx extrapolate_to_zero(const std::vector<double>& x, const std::vector<cplx>& y) { return neville(x, y, nullptr); }

DirectSumResult dispersion_direct_sum(const LatticeSpec& spec, Momentum2 p, int cutoff, double conv_factor,
                                      int levels) {
  if (!(conv_factor > 0.0)) throw DomainError("direct sum: convergence factor must be positive");
  if (levels < 1 || levels > 8) throw DomainError("direct sum: 1..8 damping levels");
  const double d = spec.d();
  const double rcut = cutoff * d;
  const double eta_min = conv_factor / std::ldexp(1.0, levels - 1);
  if (eta_min * rcut < 30.0) {
    std::ostringstream os;
    os << "direct sum: cutoff " << cutoff << " too short for eta = " << eta_min << " (need eta R > 30)";
    throw DomainError(os.str());
  }

  const Vec3c& e = spec.polarization;
  std::vector<cplx> acc(levels);
  // pairs R, -R share e*.G.e, so sum 2 cos(p.R) over half the lattice
  for (int n = 0; n <= cutoff; ++n) {
    for (int m = (n == 0 ? 1 : -cutoff); m <= cutoff; ++m) {
      const double rx = m * d, ry = n * d;
      const double r = std::hypot(rx, ry);
      if (r > rcut) continue;
      const cplx w = project(dyadic_green({rx, ry, 0.0}), e, e) * (2.0 * std::cos(p.kx * rx + p.ky * ry));
      double damp = std::exp(-eta_min * r);
      for (int k = levels - 1; k >= 0; --k) {
        acc[k] += w * damp;
        damp *= damp;
      }
    }
  }

  DirectSumResult out;
  for (int k = 0; k < levels; ++k) {
    out.etas.push_back(conv_factor / std::ldexp(1.0, k));
    out.damped.push_back(spec.gamma0 * (-3.0 * kPi * acc[k] - 0.5 * kI));
  }
  std::vector<double> corr;
  const cplx v = neville(out.etas, out.damped, &corr);
  out.value = {v.real(), v.imag()};
  out.residual = corr.empty() ? 0.0 : corr.back();
  out.flagged = !decreasing(corr);
  if (out.flagged) out.note = "eta extrapolation corrections are not decreasing";
  return out;
}

DirectSumResult dispersion_direct_sum(const LatticeSpec& spec, Momentum2 p, const OracleConfig& cfg) {
  const double g = 2.0 * kPi / spec.d();
  double dist = INFINITY;
  for (int m = -2; m <= 2; ++m)
    for (int n = -2; n <= 2; ++n) dist = std::min(dist, std::abs((p + Momentum2{m * g, n * g}).norm() - 1.0));
  if (!(dist > 0.0)) throw DomainError("direct sum: p lies on a light-cone circle");
  const double eta = std::min(cfg.direct_eta, dist / 3.0);
  const double eta_min = eta / std::ldexp(1.0, cfg.direct_levels - 1);
  const int cutoff = std::max(cfg.realspace_cutoff, static_cast<int>(std::ceil(31.0 / (eta_min * spec.d()))));
  return dispersion_direct_sum(spec, p, cutoff, eta, cfg.direct_levels);
}

GridSumResult propagator_grid_sum(const PairBand& band, double E, int grid_n, const std::vector<double>& etas,
                                  double flag_tolerance) {
  if (grid_n < 2) throw DomainError("grid sum: grid_n must be >= 2");
  if (etas.empty()) throw DomainError("grid sum: empty eta sequence");
  const double b = band.half_width();
  const double h = 2.0 * b / grid_n;
  const double w = 0.5 * h * h;
  const std::size_t ne = etas.size();
  // one partial sum per row, reduced in row order: the result does not
  // depend on the thread count
  std::vector<std::vector<std::array<cplx, 3>>> rows(grid_n, std::vector<std::array<cplx, 3>>(ne));
  std::vector<int> skipped_rows(grid_n, 0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < grid_n; ++i) {
    auto& acc = rows[i];
    for (int j = 0; j < grid_n; ++j) {
      const Momentum2 q{-b + (i + 0.5) * h, -b + (j + 0.5) * h};
      ComplexEnergy e2;
      try {
        e2 = band.eps2(q);
      } catch (const DomainError&) {
        ++skipped_rows[i];  // node exactly on a light-cone circle
        continue;
      }
      const int beta = band.bright_count(q);
      for (std::size_t k = 0; k < ne; ++k) acc[k][beta] += w / (cplx{E, etas[k]} - e2.value());
    }
  }
  std::vector<std::array<cplx, 3>> acc(ne);
  int skipped = 0;
  for (int i = 0; i < grid_n; ++i) {
    skipped += skipped_rows[i];
    for (std::size_t k = 0; k < ne; ++k)
      for (int beta = 0; beta < 3; ++beta) acc[k][beta] += rows[i][k][beta];
  }

  GridSumResult out;
  std::vector<double> corr_total;
  for (int beta = 0; beta < 3; ++beta) {
    std::vector<cplx> y(ne);
    for (std::size_t k = 0; k < ne; ++k) y[k] = acc[k][beta];
    out.L_by_domain[beta] = neville(etas, y, nullptr);
  }
  for (std::size_t k = 0; k < ne; ++k) out.per_eta.push_back(acc[k][0] + acc[k][1] + acc[k][2]);
  out.L = neville(etas, out.per_eta, &corr_total);
  out.residual = corr_total.empty() ? 0.0 : corr_total.back();
  if (out.residual > flag_tolerance * std::abs(out.L)) {
    out.flagged = true;
    out.note = "extrapolation residual above tolerance";
  }
  if (skipped > 0) {
    out.note += (out.note.empty() ? "" : "; ") + std::to_string(skipped) + " nodes on a light-cone circle skipped";
  }
  return out;
}

std::vector<GridCriticalPoint> critical_points_grid(const PairBand& band, int grid_n, double margin) {
  if (grid_n < 8) throw DomainError("critical grid: grid_n must be >= 8");
  const double b = band.half_width();
  const double h = 2.0 * b / grid_n;
  const int n = grid_n;
  std::vector<double> f(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Momentum2 q{-b + i * h, -b + j * h};
      const bool dark = band.bright_count(q) == 0 && band.light_cone_distance(q) > margin * b;
      f[static_cast<std::size_t>(i) * n + j] = dark ? band.eps2(q).re : std::nan("");
    }
  }
  auto at = [&](int i, int j) {
    i = ((i % n) + n) % n;
    j = ((j % n) + n) % n;
    return f[static_cast<std::size_t>(i) * n + j];
  };
  // ring order, counter-clockwise
  const int di[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  const int dj[8] = {0, 1, 1, 1, 0, -1, -1, -1};

  struct Hit {
    GridCriticalPoint cp;
    double grad;
  };
  std::vector<Hit> hits;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double c = at(i, j);
      if (std::isnan(c)) continue;
      double diff[8];
      bool ok = true;
      for (int k = 0; k < 8; ++k) {
        const double v = at(i + di[k], j + dj[k]);
        if (std::isnan(v)) ok = false;
        diff[k] = v - c;
      }
      if (!ok) continue;
      int pos = 0, neg = 0, changes = 0;
      for (int k = 0; k < 8; ++k) {
        pos += diff[k] > 0.0;
        neg += diff[k] < 0.0;
        if ((diff[k] > 0.0) != (diff[(k + 1) % 8] > 0.0)) ++changes;
      }
      CriticalKind kind;
      if (neg == 8) kind = CriticalKind::maximum;
      else if (pos == 8) kind = CriticalKind::minimum;
      else if (changes >= 4) kind = CriticalKind::saddle;
      else continue;
      GridCriticalPoint cp;
      cp.q = {-b + i * h, -b + j * h};
      cp.energy = c;
      cp.kind = kind;
      cp.hessian = {(diff[0] + diff[4]) / (h * h), (diff[1] + diff[5] - diff[3] - diff[7]) / (4.0 * h * h),
                    (diff[2] + diff[6]) / (h * h)};
      const double gx = (diff[0] - diff[4]) / (2.0 * h), gy = (diff[2] - diff[6]) / (2.0 * h);
      hits.push_back({cp, std::hypot(gx, gy)});
    }
  }

  // one representative per orbit: the most stationary node of its cluster
  std::vector<Hit> reps;
  std::vector<std::vector<Momentum2>> orbits;
  for (const auto& hit : hits) {
    bool merged = false;
    for (std::size_t r = 0; r < reps.size() && !merged; ++r) {
      if (reps[r].cp.kind != hit.cp.kind) continue;
      for (const auto& o : orbits[r]) {
        if (band.periodic_distance(o, hit.cp.q) < 2.5 * h) {
          if (hit.grad < reps[r].grad) {
            reps[r] = hit;
            orbits[r] = band.orbit(hit.cp.q, 0.5 * h);
          }
          merged = true;
          break;
        }
      }
    }
    if (!merged) {
      reps.push_back(hit);
      orbits.push_back(band.orbit(hit.cp.q, 0.5 * h));
    }
  }
  std::vector<GridCriticalPoint> out;
  for (auto& r : reps) {
    r.cp.q = band.canonical(r.cp.q);
    out.push_back(r.cp);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GridCriticalPoint& a, const GridCriticalPoint& c) { return a.energy > c.energy; });
  return out;
}

}  // namespace arrayscat::oracle
