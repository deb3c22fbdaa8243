#include "arrayscat/bands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "arrayscat/contour.hpp"
#include "arrayscat/errors.hpp"

namespace arrayscat {

namespace {

constexpr int kPointGroup[8][2][2] = {
    {{1, 0}, {0, 1}},  {{0, -1}, {1, 0}}, {{-1, 0}, {0, -1}}, {{0, 1}, {-1, 0}},
    {{1, 0}, {0, -1}}, {{-1, 0}, {0, 1}}, {{0, 1}, {1, 0}},   {{0, -1}, {-1, 0}},
};

bool near_lattice(double x, double period) {
  const double k = std::round(x / period);
  return std::abs(x - k * period) < 1e-10 * period;
}

}  // namespace

PairBand::PairBand(std::shared_ptr<const DispersionModel> model, Momentum2 P)
    : model_(std::move(model)), P_(P), b_(model_->spec().bz_half_width()) {
  const auto m = model_->polarization_matrix();
  const double mat[2][2] = {{m[0], m[1]}, {m[1], m[2]}};
  const double period = 2.0 * b_;
  for (const auto& g : kPointGroup) {
    // g^T M g == M keeps |e.p|^2, and hence Delta, invariant
    bool ok = true;
    for (int i = 0; i < 2 && ok; ++i)
      for (int j = 0; j < 2 && ok; ++j) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) s += g[k][i] * mat[k][l] * g[l][j];
        ok = std::abs(s - mat[i][j]) < 1e-12;
      }
    if (!ok) continue;
    const Momentum2 gp{g[0][0] * P.kx + g[0][1] * P.ky, g[1][0] * P.kx + g[1][1] * P.ky};
    if (!near_lattice(gp.kx - P.kx, period) || !near_lattice(gp.ky - P.ky, period)) continue;
    PairSymmetry s;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s.g[i][j] = g[i][j];
    s.t = {0.5 * (gp.kx - P.kx), 0.5 * (gp.ky - P.ky)};
    symmetries_.push_back(s);
  }
}

ComplexEnergy PairBand::eps2(const Momentum2& q) const {
  return model_->dispersion(p1(q)) + model_->dispersion(p2(q));
}

Derivs2 PairBand::delta2(const Momentum2& q, bool second) const {
  const Derivs2 a = model_->delta_derivs(p1(q), second);
  const Derivs2 c = model_->delta_derivs(p2(q), second);
  Derivs2 out;
  out.f = a.f + c.f;
  out.fx = a.fx - c.fx;
  out.fy = a.fy - c.fy;
  out.fxx = a.fxx + c.fxx;
  out.fxy = a.fxy + c.fxy;
  out.fyy = a.fyy + c.fyy;
  return out;
}

int PairBand::bright_count(const Momentum2& q) const {
  const auto& s = spec();
  return static_cast<int>(!is_dark(reduce_to_bz(s, p1(q)))) + static_cast<int>(!is_dark(reduce_to_bz(s, p2(q))));
}

double PairBand::light_cone_distance(const Momentum2& q) const {
  const auto& s = spec();
  const double r1 = reduce_to_bz(s, p1(q)).norm(), r2 = reduce_to_bz(s, p2(q)).norm();
  return std::min(std::abs(r1 - 1.0), std::abs(r2 - 1.0));
}

PairBand::Velocity PairBand::group_velocity(const Momentum2& q, double margin) const {
  const Derivs2 d = delta2(q, false);
  Velocity v;
  v.speed = std::hypot(d.fx, d.fy);
  v.reliable = bright_count(q) == 0 && light_cone_distance(q) >= margin;
  return v;
}

Momentum2 PairBand::wrap(const Momentum2& q) const { return reduce_to_bz(spec(), q); }

Momentum2 PairBand::canonical(const Momentum2& q) const {
  const Momentum2 a = wrap(q), c = wrap({-q.kx, -q.ky});
  if (a.ky > c.ky || (a.ky == c.ky && a.kx >= c.kx)) return a;
  return c;
}

double PairBand::periodic_distance(const Momentum2& q1, const Momentum2& q2) const {
  const Momentum2 d = wrap({q1.kx - q2.kx, q1.ky - q2.ky});
  return d.norm();
}

std::vector<Momentum2> PairBand::orbit(const Momentum2& q, double tol) const {
  std::vector<Momentum2> out;
  auto add = [&](Momentum2 x) {
    x = wrap(x);
    for (const auto& y : out)
      if (periodic_distance(x, y) < tol) return;
    out.push_back(x);
  };
  for (const auto& s : symmetries_) {
    const Momentum2 x = s.apply(q);
    add(x);
    add({-x.kx, -x.ky});
  }
  std::sort(out.begin(), out.end(), [](const Momentum2& a, const Momentum2& c) {
    return a.ky != c.ky ? a.ky < c.ky : a.kx < c.kx;
  });
  return out;
}

const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::minimum: return "minimum";
    default: return "unclassified";
  }
}

namespace {

void classify(CriticalPoint& cp, const Derivs2& d, double det_tol) {
  cp.hessian = {d.fxx, d.fxy, d.fyy};
  const double mean = 0.5 * (d.fxx + d.fyy);
  const double rad = std::hypot(0.5 * (d.fxx - d.fyy), d.fxy);
  cp.hessian_eigs = {mean - rad, mean + rad};
  const double scale = std::max({std::abs(d.fxx), std::abs(d.fyy), std::abs(d.fxy)});
  const double det = d.fxx * d.fyy - d.fxy * d.fxy;
  if (scale == 0.0 || std::abs(det) < det_tol * scale * scale) {
    cp.kind = CriticalKind::unclassified;
  } else if (det < 0.0) {
    cp.kind = CriticalKind::saddle;
  } else {
    cp.kind = mean < 0.0 ? CriticalKind::maximum : CriticalKind::minimum;
  }
}

}  // namespace

std::vector<CriticalPoint> find_critical_points(const PairBand& band, const CriticalSearchOptions& opts) {
  if (opts.grid_n < 4) throw ConfigError("critical-point search needs grid_n >= 4");
  const double b = band.half_width();
  const double h = 2.0 * b / opts.grid_n;
  const double margin = opts.light_cone_margin * b;
  // upper half of the cell plus two cells of padding on every side, so that
  // points on the symmetry lines and cell edges get bracketed
  const int nx = opts.grid_n + 5, ny = opts.grid_n / 2 + 5;
  const double x0 = -b - 2.0 * h, y0 = -2.0 * h;
  std::vector<double> gx(nx * ny), gy(nx * ny);
  std::vector<char> ok(nx * ny);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const Momentum2 q{x0 + i * h, y0 + j * h};
      const int k = i * ny + j;
      ok[k] = band.bright_count(q) == 0 && band.light_cone_distance(q) > margin;
      if (ok[k]) {
        const Derivs2 d = band.delta2(q, false);
        gx[k] = d.fx;
        gy[k] = d.fy;
      }
    }
  }

  std::vector<Momentum2> seeds;
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      const int c[4] = {i * ny + j, (i + 1) * ny + j, (i + 1) * ny + j + 1, i * ny + j + 1};
      if (!(ok[c[0]] && ok[c[1]] && ok[c[2]] && ok[c[3]])) continue;
      double lx = gx[c[0]], hx = lx, ly = gy[c[0]], hy = ly;
      for (int k = 1; k < 4; ++k) {
        lx = std::min(lx, gx[c[k]]);
        hx = std::max(hx, gx[c[k]]);
        ly = std::min(ly, gy[c[k]]);
        hy = std::max(hy, gy[c[k]]);
      }
      if (lx <= 0.0 && hx >= 0.0 && ly <= 0.0 && hy >= 0.0)
        seeds.push_back({x0 + (i + 0.5) * h, y0 + (j + 0.5) * h});
    }
  }

  std::vector<CriticalPoint> raw(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    CriticalPoint& cp = raw[s];
    Momentum2 q = seeds[s];
    Derivs2 d = band.delta2(q, true);
    bool done = false;
    int it = 0;
    for (; it < opts.max_newton; ++it) {
      if (d.grad_norm() < opts.gradient_tol) {
        done = true;
        break;
      }
      const double det = d.fxx * d.fyy - d.fxy * d.fxy;
      if (det == 0.0) break;
      double sx = -(d.fyy * d.fx - d.fxy * d.fy) / det;
      double sy = -(-d.fxy * d.fx + d.fxx * d.fy) / det;
      const double len = std::hypot(sx, sy);
      if (len > 4.0 * h) {
        sx *= 4.0 * h / len;
        sy *= 4.0 * h / len;
      }
      q = {q.kx + sx, q.ky + sy};
      if (band.bright_count(q) != 0 || band.light_cone_distance(q) < 0.5 * margin) break;
      d = band.delta2(q, true);
    }
    cp.q = q;
    cp.energy = d.f;
    cp.gradient_norm = d.grad_norm();
    cp.converged = done;
    classify(cp, d, opts.det_tol);
    if (!done) {
      std::ostringstream os;
      os << "Newton stopped after " << it << " steps from seed (" << seeds[s].kx << ", " << seeds[s].ky
         << ") with |grad| = " << cp.gradient_norm;
      cp.diagnostic = os.str();
    }
  }

  const double dedup = opts.dedup_tol * b;
  std::vector<CriticalPoint> out;
  std::vector<CriticalPoint> failed;
  for (auto& cp : raw) {
    if (!cp.converged) {
      // keep one report per distinct end point
      bool seen = false;
      for (const auto& f : failed) seen = seen || band.periodic_distance(f.q, cp.q) < 10.0 * h;
      if (!seen) failed.push_back(cp);
      continue;
    }
    cp.symmetry_orbit = band.orbit(cp.q, dedup);
    bool dup = false;
    for (const auto& e : out) {
      for (const auto& img : cp.symmetry_orbit)
        if (band.periodic_distance(img, e.q) < dedup) {
          dup = true;
          break;
        }
      if (dup) break;
    }
    if (dup) continue;
    cp.q = band.canonical(cp.q);
    out.push_back(std::move(cp));
  }
  for (auto& f : failed) {
    f.q = band.canonical(f.q);
    out.push_back(std::move(f));
  }

  std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& c) {
    if (a.converged != c.converged) return a.converged;
    if (std::abs(a.energy - c.energy) > 1e-12) return a.energy > c.energy;
    if (a.q.ky != c.q.ky) return a.q.ky < c.q.ky;
    return a.q.kx < c.q.kx;
  });
  return out;
}

std::vector<SaddleLine> saddle_lines(const PairBand& band, double level, const std::vector<CriticalPoint>& saddles,
                                     const ContourOptions& opts) {
  if (opts.grid_n < 4) throw ConfigError("contour extraction needs grid_n >= 4");
  const double b = band.half_width();
  const int n = opts.grid_n + 1;
  const double h = 2.0 * b / opts.grid_n;
  const double margin = opts.light_cone_margin * b;
  std::vector<double> values(static_cast<std::size_t>(n) * n);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Momentum2 q{-b + i * h, -b + j * h};
      const bool dark = band.bright_count(q) == 0 && band.light_cone_distance(q) > margin;
      values[static_cast<std::size_t>(i) * n + j] = dark ? band.delta2(q, false).f : std::nan("");
    }
  }

  std::vector<Momentum2> excluded;
  for (const auto& s : saddles) {
    const auto orb = s.symmetry_orbit.empty() ? std::vector<Momentum2>{s.q} : s.symmetry_orbit;
    excluded.insert(excluded.end(), orb.begin(), orb.end());
  }
  const double radius = opts.exclusion_radius * b;

  auto project = [&](Momentum2 q, bool& good) {
    for (int it = 0; it < 12; ++it) {
      const Derivs2 d = band.delta2(q, false);
      const double r = d.f - level;
      if (std::abs(r) < 1e-3 * opts.tolerance) break;
      const double g2 = d.fx * d.fx + d.fy * d.fy;
      if (g2 == 0.0) break;
      q = {q.kx - r * d.fx / g2, q.ky - r * d.fy / g2};
      if (band.bright_count(q) != 0) break;
    }
    good = band.bright_count(q) == 0 && std::abs(band.delta2(q, false).f - level) < opts.tolerance;
    return q;
  };

  const MarchingSquares ms(n, n, -b, -b, h, h);
  std::vector<SaddleLine> out;
  for (const auto& raw : ms.extract(values, level)) {
    const bool closed_raw = raw.size() > 2 && raw.front().x == raw.back().x && raw.front().y == raw.back().y;
    SaddleLine cur;
    bool split = false;
    for (const auto& v : raw) {
      Momentum2 q{v.x, v.y};
      bool keep = true;
      for (const auto& e : excluded)
        if (band.periodic_distance(q, e) < radius) {
          keep = false;
          break;
        }
      if (keep) q = project(q, keep);
      if (keep) {
        cur.polyline.push_back(q);
      } else {
        split = true;
        if (cur.polyline.size() >= 2) out.push_back(std::move(cur));
        cur = {};
      }
    }
    cur.closed = closed_raw && !split;
    if (cur.polyline.size() >= 2) out.push_back(std::move(cur));
  }
  return out;
}

}  // namespace arrayscat
