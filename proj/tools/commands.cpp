#include "commands.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "arrayscat/criticality.hpp"
#include "arrayscat/errors.hpp"
#include "arrayscat/oracle.hpp"
#include "arrayscat/scattering.hpp"

namespace arrayscat::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Table {
  std::string stem;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> notes;  // extra '#' lines
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

// The echoed configuration leaves out run-local keys, like the hash does, so
// outputs do not depend on where or with how many threads they were written.
json echoed(const RunConfig& cfg) {
  json j = cfg.document;
  j.erase("output_dir");
  j.erase("threads");
  return j;
}

json meta(const RunConfig& cfg) {
  return json{{"version", kVersion}, {"config_hash", cfg.hash_hex()}, {"config", echoed(cfg)}};
}

std::string write_table(const RunConfig& cfg, const Table& t) {
  fs::create_directories(cfg.output_dir);
  if (cfg.format == "json") {
    json j = meta(cfg);
    j["columns"] = t.columns;
    j["notes"] = t.notes;
    json rows = json::array();
    for (const auto& r : t.rows) {
      json row = json::array();
      for (double v : r) row.push_back(std::isfinite(v) ? json(std::stod(fmt(v))) : json(fmt(v)));
      rows.push_back(row);
    }
    j["rows"] = rows;
    const std::string path = (fs::path(cfg.output_dir) / (t.stem + ".json")).string();
    std::ofstream(path) << j.dump(1) << "\n";
    return path;
  }
  const std::string path = (fs::path(cfg.output_dir) / (t.stem + ".csv")).string();
  std::ofstream out(path);
  out << "# arrayscat " << kVersion << "\n";
  out << "# config_hash " << cfg.hash_hex() << "\n";
  out << "# config " << echoed(cfg).dump() << "\n";
  for (const auto& n : t.notes) out << "# " << n << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt(r[i]);
    out << "\n";
  }
  return path;
}

std::string write_json(const RunConfig& cfg, const std::string& stem, const json& payload) {
  fs::create_directories(cfg.output_dir);
  json j = meta(cfg);
  j["data"] = payload;
  const std::string path = (fs::path(cfg.output_dir) / (stem + ".json")).string();
  std::ofstream(path) << j.dump(1) << "\n";
  return path;
}

// Runs f(i) for i < n in parallel and rethrows the first failure in index order.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::shared_ptr<const DispersionModel> make_model(const RunConfig& cfg) {
  return std::make_shared<DispersionModel>(cfg.lattice, cfg.dispersion);
}

json to_json(Momentum2 q) { return json::array({q.kx, q.ky}); }

json to_json(const CriticalPoint& c, Momentum2 P) {
  json orbit = json::array();
  for (const auto& q : c.symmetry_orbit) orbit.push_back(to_json(q));
  return json{{"P", to_json(P)},
              {"q", to_json(c.q)},
              {"E", c.energy},
              {"kind", to_string(c.kind)},
              {"hessian", c.hessian},
              {"hessian_eigs", c.hessian_eigs},
              {"symmetry_orbit", orbit},
              {"gradient_norm", c.gradient_norm},
              {"converged", c.converged},
              {"diagnostic", c.diagnostic}};
}

std::vector<CriticalPoint> classified(const std::vector<CriticalPoint>& cps, CriticalKind kind) {
  std::vector<CriticalPoint> out;
  for (const auto& c : cps)
    if (c.converged && c.kind == kind) out.push_back(c);
  return out;
}

bool at_critical(const LocalPropagator& lp, double E) {
  for (const auto& c : lp.critical_points())
    if (c.converged && std::abs(E - c.energy) <= 1e-12 * std::max(1.0, std::abs(c.energy))) return true;
  return false;
}

}  // namespace

CommandResult cmd_bands(const RunConfig& cfg) {
  auto model = make_model(cfg);
  const PairBand band(model, cfg.P);
  const double b = band.half_width();
  const int n = cfg.q_grid;
  const double h = 2.0 * b / n;
  CommandResult res;

  Table disp{"dispersion", {"kx", "ky", "delta", "gamma"}, {}, {}};
  Table pair{"band2", {"qx", "qy", "delta2", "gamma2", "beta"}, {}, {}};
  disp.rows.resize(static_cast<std::size_t>(n) * n);
  pair.rows.resize(disp.rows.size());
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (int j = 0; j < n; ++j) {
      const Momentum2 q{-b + i * h, -b + j * h};
      const std::size_t k = i * n + j;
      try {
        const ComplexEnergy e = model->dispersion(q);
        disp.rows[k] = {q.kx, q.ky, e.re, e.gamma()};
      } catch (const DomainError&) {
        disp.rows[k] = {q.kx, q.ky, NAN, NAN};
      }
      try {
        const ComplexEnergy e = band.eps2(q);
        pair.rows[k] = {q.kx, q.ky, e.re, e.gamma(), double(band.bright_count(q))};
      } catch (const DomainError&) {
        pair.rows[k] = {q.kx, q.ky, NAN, NAN, double(band.bright_count(q))};
      }
    }
  });
  res.files.push_back(write_table(cfg, disp));
  res.files.push_back(write_table(cfg, pair));

  const auto cps = find_critical_points(band, cfg.critical);
  json list = json::array();
  for (const auto& c : cps) list.push_back(to_json(c, cfg.P));
  res.files.push_back(write_json(cfg, "critical_points", list));

  Table lines{"saddle_lines", {"level", "line", "closed", "vertex", "qx", "qy"}, {}, {}};
  const auto saddles = classified(cps, CriticalKind::saddle);
  std::vector<double> levels;
  for (const auto& s : saddles)
    if (std::none_of(levels.begin(), levels.end(), [&](double l) { return std::abs(l - s.energy) < 1e-9; }))
      levels.push_back(s.energy);
  int line_id = 0;
  for (double level : levels) {
    for (const auto& l : saddle_lines(band, level, saddles, cfg.contour)) {
      for (std::size_t v = 0; v < l.polyline.size(); ++v)
        lines.rows.push_back({level, double(line_id), double(l.closed), double(v), l.polyline[v].kx,
                              l.polyline[v].ky});
      ++line_id;
    }
  }
  res.files.push_back(write_table(cfg, lines));
  res.report = json{{"critical_points", list.size()},
                    {"maxima", classified(cps, CriticalKind::maximum).size()},
                    {"saddles", saddles.size()}};
  return res;
}

CommandResult cmd_smatrix(const RunConfig& cfg) {
  auto model = make_model(cfg);
  const LocalPropagator lp(PairBand(model, cfg.P), cfg.propagator);
  const auto E = cfg.energy_window.grid();
  Table s{"smatrix", {"E", "ReS", "ImS", "mag2", "phase", "trivial"}, {}, {}};
  Table L{"propagator", {"E", "ReL", "ImL", "ReL0", "ImL0", "ReL1", "ImL1", "ReL2", "ImL2", "err"}, {}, {}};
  s.rows.resize(E.size());
  L.rows.resize(E.size());
  std::vector<std::string> skipped(E.size());
  parallel_for(E.size(), [&](std::size_t i) {
    if (at_critical(lp, E[i])) {
      s.rows[i] = {E[i], NAN, NAN, NAN, NAN, NAN};
      L.rows[i] = {E[i], NAN, NAN, NAN, NAN, NAN, NAN, NAN, NAN, NAN};
      skipped[i] = "E = " + fmt(E[i]) + " is a critical energy; L diverges there";
      return;
    }
    const auto ev = lp.evaluate(E[i]);
    const auto sp = s_eigenvalue(ev, cfg.P, E[i]);
    s.rows[i] = {E[i], sp.s.real(), sp.s.imag(), sp.magnitude2, sp.phase, double(sp.trivial)};
    const auto& p = ev.plus;
    L.rows[i] = {E[i],
                 p.L.real(),
                 p.L.imag(),
                 p.L_by_domain[0].real(),
                 p.L_by_domain[0].imag(),
                 p.L_by_domain[1].real(),
                 p.L_by_domain[1].imag(),
                 p.L_by_domain[2].real(),
                 p.L_by_domain[2].imag(),
                 p.error_estimate};
  });
  for (const auto& c : lp.critical_points())
    if (c.converged) s.notes.push_back(std::string("critical ") + to_string(c.kind) + " " + fmt(c.energy));
  for (const auto& k : skipped)
    if (!k.empty()) s.notes.push_back(k);
  L.notes = s.notes;
  CommandResult res;
  res.files.push_back(write_table(cfg, s));
  res.files.push_back(write_table(cfg, L));
  return res;
}

CommandResult cmd_xsection(const RunConfig& cfg) {
  auto model = make_model(cfg);
  const PairBand band(model, cfg.P);
  const LocalPropagator lp(band, cfg.propagator);
  const double b = band.half_width();
  const int n = cfg.q_grid;
  const double h = 2.0 * b / n;
  CommandResult res;

  // alpha = 0 map over the canonical half; L(E) interpolated from a table
  const int ny = n / 2 + 1;
  struct Node {
    Momentum2 q;
    bool dark = false;
    double E = NAN;
  };
  std::vector<Node> nodes(static_cast<std::size_t>(n) * ny);
  double emin = INFINITY, emax = -INFINITY;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ny; ++j) {
      Node& nd = nodes[static_cast<std::size_t>(i) * ny + j];
      nd.q = {-b + i * h, j * h};
      nd.dark = band.bright_count(nd.q) == 0 && band.light_cone_distance(nd.q) > 1e-3 * b;
      if (!nd.dark) continue;
      nd.E = band.delta2(nd.q, false).f;
      if (nd.E < cfg.xsection.e_floor) continue;
      emin = std::min(emin, nd.E);
      emax = std::max(emax, nd.E);
    }
  }
  Table qmap{"xsection_qmap",
             {"qx", "qy", "sigma0", "sigma1", "sigma2", "sigma_tot", "branch2", "E", "v_g", "eigen_density"},
             {},
             {}};
  Table ltab{"xsection_Ltable", {"E", "ReL", "ImL", "ReL0", "ImL0", "ReL1", "ImL1", "ReL2", "ImL2"}, {}, {}};
  if (emin <= emax) {
    const int m = cfg.xsection.table_points;
    std::vector<double> tE(m);
    std::vector<PropagatorResult> tL(m);
    for (int k = 0; k < m; ++k) tE[k] = emin + (emax - emin) * k / (m - 1);
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t k) { tL[k] = lp(tE[k], Side::plus_i0); });
    for (int k = 0; k < m; ++k) {
      const auto& p = tL[k];
      ltab.rows.push_back({tE[k], p.L.real(), p.L.imag(), p.L_by_domain[0].real(), p.L_by_domain[0].imag(),
                           p.L_by_domain[1].real(), p.L_by_domain[1].imag(), p.L_by_domain[2].real(),
                           p.L_by_domain[2].imag()});
    }
    auto interp = [&](double E) {
      const double t = (m - 1) * (E - emin) / (emax - emin);
      const int k = std::clamp(static_cast<int>(std::floor(t)), 0, m - 2);
      const double f = t - k;
      LocalPropagator::Evaluation ev;
      for (int beta = 0; beta < 3; ++beta)
        ev.plus.L_by_domain[beta] = (1.0 - f) * tL[k].L_by_domain[beta] + f * tL[k + 1].L_by_domain[beta];
      ev.plus.L = ev.plus.L_by_domain[0] + ev.plus.L_by_domain[1] + ev.plus.L_by_domain[2];
      return ev;
    };
    for (const auto& nd : nodes) {
      if (!nd.dark || !(nd.E >= emin)) {
        qmap.rows.push_back({nd.q.kx, nd.q.ky, NAN, NAN, NAN, NAN, NAN, nd.E, NAN, NAN});
        continue;
      }
      const auto in = IncomingState::dark_pair_at(band, nd.q);
      const auto r = cross_section(in, interp(nd.E), cfg.xsection.a_alpha[0]);
      qmap.rows.push_back({nd.q.kx, nd.q.ky, r.sigma[0], r.sigma[1], r.sigma[2], r.sigma_tot, r.branching[2], nd.E,
                           in.v_g, r.eigen_density});
    }
  }
  qmap.notes.push_back("L(E) linearly interpolated from xsection_Ltable");
  res.files.push_back(write_table(cfg, qmap));
  res.files.push_back(write_table(cfg, ltab));

  // alpha = 2 energy sweep, photons carrying P/2 each
  const auto E = cfg.energy_window.grid();
  Table ph{"xsection_photons",
           {"E", "sigma0", "sigma1", "sigma2", "sigma_tot", "branch0", "branch1", "branch2", "t2", "v_g"},
           {},
           {}};
  ph.rows.resize(E.size());
  std::vector<std::string> skipped(E.size());
  parallel_for(E.size(), [&](std::size_t i) {
    if (at_critical(lp, E[i])) {
      ph.rows[i] = {E[i], NAN, NAN, NAN, NAN, NAN, NAN, NAN, NAN, NAN};
      skipped[i] = "E = " + fmt(E[i]) + " is a critical energy; L diverges there";
      return;
    }
    const auto in = IncomingState::photon_pair_symmetric(*model, cfg.P, E[i]);
    const auto r = cross_section(in, lp.evaluate(E[i]), cfg.xsection.a_alpha[2]);
    ph.rows[i] = {E[i],           r.sigma[0],     r.sigma[1],     r.sigma[2], r.sigma_tot,
                  r.branching[0], r.branching[1], r.branching[2], r.t2,       in.v_g};
  });
  for (const auto& c : lp.critical_points())
    if (c.converged) ph.notes.push_back(std::string("critical ") + to_string(c.kind) + " " + fmt(c.energy));
  for (const auto& k : skipped)
    if (!k.empty()) ph.notes.push_back(k);
  res.files.push_back(write_table(cfg, ph));
  return res;
}

CommandResult cmd_scaling(const RunConfig& cfg) {
  auto model = make_model(cfg);
  const PairBand band(model, cfg.P);
  const LocalPropagator lp(band, cfg.propagator);
  const auto offsets = log_offsets(cfg.scaling.dE_min, cfg.scaling.dE_max, cfg.scaling.per_decade);
  const auto& cps = lp.critical_points();
  const auto saddles = classified(cps, CriticalKind::saddle);

  Table sw{"scaling_sweeps",
           {"critical", "kind", "side", "dE", "E", "ReL", "ImL", "mag2", "phase", "one_minus_s2", "photon_sigma0",
            "photon_sigma1", "photon_sigma2", "photon_sigma_tot", "qcrit_sigma0", "qcrit_sigma1", "qcrit_sigma2",
            "qcrit_sigma_tot", "qcrit_v_g", "line_sigma0", "line_sigma1", "line_sigma2", "line_sigma_tot"},
           {},
           {}};
  json cells = json::array();

  int index = 0;
  for (const auto& c : cps) {
    if (!c.converged || (c.kind != CriticalKind::maximum && c.kind != CriticalKind::saddle)) continue;
    SweepSetup setup;
    setup.a_alpha = cfg.xsection.a_alpha[0];
    if (c.kind == CriticalKind::saddle) {
      setup.line_anchor = saddle_line_anchor(band, saddle_lines(band, c.energy, saddles, cfg.contour), saddles);
    }
    for (int side : {-1, 1}) {
      if (c.kind == CriticalKind::maximum && side > 0) continue;
      const auto rows = critical_sweep(lp, c, side, offsets, setup);
      auto series = [&](auto get) {
        std::vector<double> y;
        for (const auto& r : rows) y.push_back(get(r));
        return y;
      };
      auto fit_cell = [&](const std::string& incoming, const std::string& quantity, int beta,
                          std::optional<ScalingClass> expected, const std::vector<double>& y) {
        json cell{{"critical", index},
                  {"kind", to_string(c.kind)},
                  {"E_crit", c.energy},
                  {"side", side},
                  {"incoming", incoming},
                  {"quantity", quantity}};
        if (beta >= 0) cell["beta"] = beta;
        if (expected) cell["expected_class"] = to_string(*expected);
        if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
          cell["status"] = "empty domain";
          cells.push_back(cell);
          return;
        }
        try {
          const auto f = scaling_fit(offsets, y);
          json ranking = json::array();
          for (const auto& s : f.ranking)
            ranking.push_back({{"class", to_string(s.cls)}, {"r2", s.r2}, {"log_scale", s.log_scale}});
          cell["fitted_class"] = to_string(f.fitted_class);
          cell["r2"] = f.r2;
          cell["ambiguous"] = f.ambiguous;
          if (f.ambiguous) cell["also"] = to_string(f.ranking[1].cls);
          cell["ranking"] = ranking;
          cell["log_scale"] = f.log_scale;
          cell["measured_power"] = f.measured_power;
          cell["measured_power_r2"] = f.measured_power_r2;
          if (expected) {
            cell["log_power_matches"] = exponents(f.fitted_class).second == exponents(*expected).second;
            cell["class_matches"] = f.fitted_class == *expected;
          }
          cell["status"] = "ok";
        } catch (const DomainError& e) {
          cell["status"] = std::string("not fitted: ") + e.what();
        }
        cells.push_back(cell);
      };

      for (int beta = 0; beta < 3; ++beta) {
        fit_cell("photons", "sigma", beta, reference_class(IncomingKind::photons, beta, c.kind),
                 series([&](const SweepRow& r) { return r.photons.sigma[beta]; }));
        fit_cell("dark_at_critical_q", "sigma", beta, reference_class(IncomingKind::dark_at_critical, beta, c.kind),
                 series([&](const SweepRow& r) { return r.dark_critical->sigma[beta]; }));
        if (setup.line_anchor)
          fit_cell("dark_off_critical_q", "sigma", beta,
                   reference_class(IncomingKind::dark_off_critical, beta, c.kind),
                   series([&](const SweepRow& r) { return r.dark_line->sigma[beta]; }));
      }
      fit_cell("s_matrix", "one_minus_s2", -1, std::nullopt,
               series([&](const SweepRow& r) { return 1.0 - r.s.magnitude2; }));

      for (const auto& r : rows) {
        const auto& d = *r.dark_critical;
        std::vector<double> row{double(index),
                                double(c.kind == CriticalKind::saddle),
                                double(side),
                                r.dE,
                                r.E,
                                r.plus.L.real(),
                                r.plus.L.imag(),
                                r.s.magnitude2,
                                r.s.phase,
                                1.0 - r.s.magnitude2,
                                r.photons.sigma[0],
                                r.photons.sigma[1],
                                r.photons.sigma[2],
                                r.photons.sigma_tot,
                                d.sigma[0],
                                d.sigma[1],
                                d.sigma[2],
                                d.sigma_tot,
                                d.incoming.v_g};
        for (int beta = 0; beta < 3; ++beta) row.push_back(r.dark_line ? r.dark_line->sigma[beta] : NAN);
        row.push_back(r.dark_line ? r.dark_line->sigma_tot : NAN);
        sw.rows.push_back(row);
      }
    }
    sw.notes.push_back("critical " + std::to_string(index) + " " + to_string(c.kind) + " E=" + fmt(c.energy) +
                       " q=(" + fmt(c.q.kx) + "," + fmt(c.q.ky) + ")");
    ++index;
  }
  CommandResult res;
  res.files.push_back(write_table(cfg, sw));
  res.files.push_back(write_json(cfg, "scaling_fits", cells));
  res.report = cells;
  return res;
}

json verify_dispersion(const RunConfig& cfg) {
  const auto model = make_model(cfg);
  const auto& v = cfg.verify;
  std::mt19937_64 rng(v.seed);
  const double b = cfg.lattice.bz_half_width();
  std::uniform_real_distribution<double> U(-b, b);
  std::vector<Momentum2> ps;
  while (static_cast<int>(ps.size()) < v.samples) {
    const Momentum2 p{U(rng), U(rng)};
    if (std::abs(p.norm() - 1.0) >= 0.1) ps.push_back(p);
  }
  std::vector<json> rec(ps.size());
  std::vector<bool> ok(ps.size());
  parallel_for(ps.size(), [&](std::size_t i) {
    const auto d = oracle::dispersion_direct_sum(cfg.lattice, ps[i], v.oracle);
    const ComplexEnergy e = model->dispersion(ps[i]);
    const double diff = std::abs(d.value.value() - e.value());
    ok[i] = diff <= v.tolerance_dispersion;
    rec[i] = {{"p", to_json(ps[i])},   {"production", {e.re, e.im}}, {"oracle", {d.value.re, d.value.im}},
              {"abs_diff", diff},      {"residual", d.residual},     {"flagged", d.flagged},
              {"passed", bool(ok[i])}};
  });
  return json{{"check", "dispersion vs direct real-space sum"},
              {"tolerance", v.tolerance_dispersion},
              {"passed", std::all_of(ok.begin(), ok.end(), [](bool x) { return x; })},
              {"samples", rec}};
}

json verify_propagator(const RunConfig& cfg) {
  const auto model = make_model(cfg);
  const auto& v = cfg.verify;
  std::mt19937_64 rng(v.seed + 1);
  const double b = cfg.lattice.bz_half_width();
  std::uniform_real_distribution<double> UP(-b, b), UE(-2.5, 3.0);
  struct Sample {
    Momentum2 P;
    double E;
  };
  std::vector<Sample> samples;
  std::vector<std::vector<double>> crit;
  while (static_cast<int>(samples.size()) < v.samples) {
    const Momentum2 P{UP(rng), UP(rng)};
    const double E = UE(rng);
    const auto cps = find_critical_points(PairBand(model, P), cfg.critical);
    bool near = false;
    for (const auto& c : cps) near = near || std::abs(c.energy - E) < 0.05;
    if (near) continue;
    samples.push_back({P, E});
  }
  std::vector<json> rec(samples.size());
  std::vector<bool> ok(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const PairBand band(model, samples[i].P);
    const LocalPropagator lp(band, cfg.propagator);
    const auto L = lp(samples[i].E, Side::plus_i0);
    const auto g = oracle::propagator_grid_sum(band, samples[i].E, v.oracle.grid_n, v.oracle.eta_sequence);
    const double rel = std::abs(L.L - g.L) / std::abs(g.L);
    ok[i] = rel <= v.tolerance_L;
    rec[i] = {{"P", to_json(samples[i].P)},
              {"E", samples[i].E},
              {"production", {L.L.real(), L.L.imag()}},
              {"oracle", {g.L.real(), g.L.imag()}},
              {"rel_diff", rel},
              {"oracle_residual", g.residual},
              {"oracle_flagged", g.flagged},
              {"note", g.note},
              {"passed", bool(ok[i])}};
  });
  return json{{"check", "local propagator vs grid sum"},
              {"grid_n", v.oracle.grid_n},
              {"tolerance", v.tolerance_L},
              {"passed", std::all_of(ok.begin(), ok.end(), [](bool x) { return x; })},
              {"samples", rec}};
}

json verify_critical_points(const RunConfig& cfg) {
  const auto model = make_model(cfg);
  const PairBand band(model, cfg.P);
  const auto cps = find_critical_points(band, cfg.critical);
  const int n = cfg.verify.critical_grid_n;
  const auto grid = oracle::critical_points_grid(band, n, cfg.critical.light_cone_margin);
  const double cell = std::sqrt(2.0) * 2.0 * band.half_width() / n;
  bool passed = true;
  json matches = json::array();
  auto near = [&](const Momentum2& a, const std::vector<Momentum2>& orbit) {
    double d = INFINITY;
    for (const auto& o : orbit) d = std::min(d, band.periodic_distance(a, o));
    return d;
  };
  for (const auto& c : cps) {
    if (!c.converged) continue;
    double best = INFINITY;
    for (const auto& g : grid)
      if (g.kind == c.kind) best = std::min(best, near(g.q, c.symmetry_orbit.empty() ? std::vector{c.q} : c.symmetry_orbit));
    const bool ok = best <= cell;
    passed = passed && ok;
    matches.push_back({{"production", to_json(c, cfg.P)}, {"grid_distance", best}, {"passed", ok}});
  }
  json extra = json::array();
  for (const auto& g : grid) {
    double best = INFINITY;
    for (const auto& c : cps)
      if (c.converged && c.kind == g.kind)
        best = std::min(best, near(g.q, c.symmetry_orbit.empty() ? std::vector{c.q} : c.symmetry_orbit));
    if (best > cell || g.kind == CriticalKind::minimum) {
      passed = false;
      extra.push_back({{"q", to_json(g.q)}, {"E", g.energy}, {"kind", to_string(g.kind)}});
    }
  }
  return json{{"check", "critical points vs grid search"},
              {"grid_n", n},
              {"cell", cell},
              {"passed", passed},
              {"production", matches},
              {"unmatched_grid_points", extra}};
}

CommandResult cmd_verify(const RunConfig& cfg) {
  CommandResult res;
  json report = json::array({verify_dispersion(cfg), verify_propagator(cfg), verify_critical_points(cfg)});
  for (const auto& r : report) res.passed = res.passed && r["passed"].get<bool>();
  res.report = report;
  res.files.push_back(write_json(cfg, "verify_report", json{{"passed", res.passed}, {"checks", report}}));
  return res;
}

int run(int argc, char** argv) {
  CLI::App app{"arrayscat: two-excitation scattering in 2D atomic arrays"};
  app.require_subcommand(1);
  std::string config_path, out_dir, format;
  std::vector<std::string> overrides;
  int threads = -1;
  auto* bands = app.add_subcommand("bands", "dispersion maps, critical points, saddle lines");
  auto* smatrix = app.add_subcommand("smatrix", "s(E) and L(E +- i0) sweeps");
  auto* xsection = app.add_subcommand("xsection", "alpha = 0 q-map and alpha = 2 energy sweep");
  auto* scaling = app.add_subcommand("scaling", "sweeps towards critical energies and class fits");
  auto* verify = app.add_subcommand("verify", "oracle battery");
  for (auto* sub : {bands, smatrix, xsection, scaling, verify}) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--set", overrides, "override, key.path=value (repeatable)")->allow_extra_args(false);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (0: OpenMP default)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!out_dir.empty()) overrides.push_back("output_dir=\"" + out_dir + "\"");
    if (!format.empty()) overrides.push_back("format=\"" + format + "\"");
    if (threads >= 0) overrides.push_back("threads=" + std::to_string(threads));
    const RunConfig cfg = RunConfig::load(config_path, overrides);
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

    CommandResult res;
    if (bands->parsed()) res = cmd_bands(cfg);
    else if (smatrix->parsed()) res = cmd_smatrix(cfg);
    else if (xsection->parsed()) res = cmd_xsection(cfg);
    else if (scaling->parsed()) res = cmd_scaling(cfg);
    else if (verify->parsed()) res = cmd_verify(cfg);
    for (const auto& f : res.files) std::cout << f << "\n";
    if (!res.passed) {
      std::cerr << "verification failed; see verify_report.json\n";
      return 4;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace arrayscat::cli
