// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "arrayscat/criticality.hpp"
#include "arrayscat/errors.hpp"
#include "commands.hpp"

using namespace arrayscat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* id, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s (%.1f s) %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string f(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// Least-squares R^2 of y against x
double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy * sxy / (sxx * syy);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

// Sweeps at P = 0 shared by criteria 2-5
struct Sweeps {
  std::shared_ptr<const DispersionModel> model;
  std::unique_ptr<LocalPropagator> lp;
  CriticalPoint cmax, csad;
  std::vector<double> offsets;
  std::vector<SweepRow> max_below, sad_below, sad_above;
};

const Sweeps& sweeps() {
  static const Sweeps s = [] {
    Sweeps s;
    s.model = std::make_shared<DispersionModel>(LatticeSpec{});
    s.lp = std::make_unique<LocalPropagator>(PairBand(s.model, {0.0, 0.0}));
    int nmax = 0, nsad = 0;
    for (const auto& c : s.lp->critical_points()) {
      if (!c.converged) continue;
      if (c.kind == CriticalKind::maximum) s.cmax = c, ++nmax;
      if (c.kind == CriticalKind::saddle) s.csad = c, ++nsad;
    }
    if (nmax != 1 || nsad != 1) throw std::runtime_error("expected one maximum and one saddle orbit at P = 0");
    s.offsets = log_offsets(1e-5, 1e-2, 3);
    SweepSetup setup;
    s.max_below = critical_sweep(*s.lp, s.cmax, -1, s.offsets, setup);
    s.sad_below = critical_sweep(*s.lp, s.csad, -1, s.offsets, setup);
    s.sad_above = critical_sweep(*s.lp, s.csad, 1, s.offsets, setup);
    return s;
  }();
  return s;
}

template <class G>
std::vector<double> column(const std::vector<SweepRow>& rows, G get) {
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(get(r));
  return y;
}

std::vector<double> log_dE(const std::vector<double>& dE) {
  std::vector<double> x;
  for (double d : dE) x.push_back(std::log(d));
  return x;
}

Outcome ac1() {
  const DispersionModel model{LatticeSpec{}};
  const double g = model.gamma({0.0, 0.0});
  return {g >= 5.4 && g <= 6.6, "Gamma(0)/Gamma0 = " + f(g, 6) + ", required [5.4, 6.6]"};
}

Outcome ac2() {
  const auto& s = sweeps();
  const auto x = log_dE(s.offsets);
  const double r_max = linear_r2(x, column(s.max_below, [](const SweepRow& r) { return r.plus.L.real(); }));
  const double r_sb = linear_r2(x, column(s.sad_below, [](const SweepRow& r) { return r.plus.L.imag(); }));
  const double r_sa = linear_r2(x, column(s.sad_above, [](const SweepRow& r) { return r.plus.L.imag(); }));
  const bool pass = r_max > 0.995 && r_sb > 0.995 && r_sa > 0.995;
  return {pass, "R^2 Re L vs log dE at E_max = " + f(r_max, 6) + "; Im L vs log dE at E_sadd below/above = " +
                    f(r_sb, 6) + "/" + f(r_sa, 6) + ", required > 0.995"};
}

Outcome ac3() {
  const auto& s = sweeps();
  bool pass = true;
  std::string detail;
  struct Case {
    const char* name;
    const std::vector<SweepRow>* rows;
    double target;  // |phase| limit
  };
  for (const Case c : {Case{"E_max", &s.max_below, 0.0}, Case{"E_sadd-", &s.sad_below, kPi},
                       Case{"E_sadd+", &s.sad_above, kPi}}) {
    const auto mag2 = column(*c.rows, [](const SweepRow& r) { return r.s.magnitude2; });
    const auto loss = column(*c.rows, [](const SweepRow& r) { return 1.0 - r.s.magnitude2; });
    const auto err = column(*c.rows, [&](const SweepRow& r) { return std::abs(std::abs(r.s.phase) - c.target); });
    const auto fit = scaling_fit(s.offsets, loss);
    const bool pure_log = fit.fitted_class == ScalingClass::log1 || fit.fitted_class == ScalingClass::log2;
    const bool ok = strictly_increasing(mag2) && mag2.back() <= 1.0 + 1e-6 && pure_log && fit.r2 > 0.99 &&
                    strictly_decreasing(err);
    pass = pass && ok;
    detail += std::string(c.name) + ": |s|^2 " + f(mag2.front(), 5) + " -> " + f(mag2.back(), 5) +
              (strictly_increasing(mag2) ? " monotone" : " NOT monotone") + ", 1-|s|^2 ~ " +
              to_string(fit.fitted_class) + " R^2 = " + f(fit.r2, 6) + ", phase error " + f(err.front(), 3) +
              " -> " + f(err.back(), 3) + (strictly_decreasing(err) ? " monotone" : " NOT monotone") + "; ";
  }
  return {pass, detail};
}

Outcome ac4() {
  const auto& s = sweeps();
  auto branch = [](const SweepRow& r) { return r.dark_critical->branching[2]; };
  const auto sad = column(s.sad_below, branch);
  const auto mx = column(s.max_below, branch);
  std::size_t i4 = 0;
  for (std::size_t i = 0; i < s.offsets.size(); ++i)
    if (std::abs(std::log10(s.offsets[i]) + 4.0) < 1e-9) i4 = i;
  const bool sad_ok = strictly_decreasing(sad) && sad[i4] < 0.02;
  // last decade: offsets from 1e-4 down to 1e-5
  double mx_min = INFINITY, mx_max = -INFINITY;
  for (std::size_t i = i4; i < mx.size(); ++i) {
    mx_min = std::min(mx_min, mx[i]);
    mx_max = std::max(mx_max, mx[i]);
  }
  const bool converged = (mx_max - mx_min) < 0.05 * mx_max;
  const bool max_ok = converged && mx_min > 0.02;
  return {sad_ok && max_ok,
          "q->q_sadd: " + f(sad.front()) + " -> " + f(sad[i4]) + " at dE=1e-4" +
              (strictly_decreasing(sad) ? " (monotone)" : " (NOT monotone)") + ", required < 0.02 [" +
              (sad_ok ? "ok" : "fail") + "]; q->q_max last decade in [" + f(mx_min) + ", " + f(mx_max) +
              "], required converged and > 0.02 [" + (max_ok ? "ok" : "fail") + "]"};
}

Outcome ac5() {
  const auto& s = sweeps();
  const LocalPropagator& lp = *s.lp;
  // sigma_{2,tot}(E) on a fixed uniform grid, not aligned with the critical energies
  const double lo = 0.31, hi = 2.41, step = 0.02;
  const int n = static_cast<int>(std::round((hi - lo) / step)) + 1;
  std::vector<double> E(n), sig(n);
  std::vector<std::exception_ptr> errs(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      E[i] = lo + i * step;
      sig[i] = cross_section(IncomingState::photon_pair_normal(*s.model, E[i]), lp.evaluate(E[i])).sigma_tot;
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);
  std::vector<double> minima;
  for (int i = 1; i + 1 < n; ++i)
    if (sig[i] < sig[i - 1] && sig[i] < sig[i + 1]) minima.push_back(E[i]);
  auto near = [&](double Ec) {
    double best = INFINITY;
    for (double m : minima) best = std::min(best, std::abs(m - Ec));
    return best;
  };
  const double dmax = near(s.cmax.energy), dsad = near(s.csad.energy);
  bool pass = dmax <= 0.1 && dsad <= 0.1;
  std::string detail = "sigma_2,tot minima nearest E_max/E_sadd at distance " + f(dmax, 3) + "/" + f(dsad, 3) +
                       " (required <= 0.1); fits:";

  // P = 0 has no beta = 1 channel for the photon pair; beta = 1 is fitted at P = (0.5, 0.5)
  const LocalPropagator lp1(PairBand(s.model, {0.5, 0.5}));
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (int beta : {0, 2}) {
    const auto get = [beta](const SweepRow& r) { return r.photons.sigma[beta]; };
    series.push_back({"E_max b" + std::to_string(beta), column(s.max_below, get)});
    series.push_back({"E_sadd- b" + std::to_string(beta), column(s.sad_below, get)});
    series.push_back({"E_sadd+ b" + std::to_string(beta), column(s.sad_above, get)});
  }
  SweepSetup setup;
  setup.dark_critical = false;
  for (const auto& c : lp1.critical_points()) {
    if (!c.converged || (c.kind != CriticalKind::maximum && c.kind != CriticalKind::saddle)) continue;
    const auto rows = critical_sweep(lp1, c, -1, s.offsets, setup);
    series.push_back({std::string(to_string(c.kind)) + "@P=(.5,.5) b1",
                      column(rows, [](const SweepRow& r) { return r.photons.sigma[1]; })});
  }
  for (const auto& [name, y] : series) {
    const auto fit = scaling_fit(s.offsets, y);
    const bool ok = (fit.fitted_class == ScalingClass::log1 || fit.fitted_class == ScalingClass::log2) && fit.r2 > 0.99;
    pass = pass && ok;
    detail += " " + name + " " + to_string(fit.fitted_class) + " " + f(fit.r2, 5) + (ok ? "" : " [fail]") + ";";
  }
  return {pass, detail};
}

RunConfig scratch_config(const std::string& tag, std::vector<std::string> overrides) {
  overrides.push_back("output_dir=\"" + (fs::temp_directory_path() / ("arrayscat_acceptance_" + tag)).string() + "\"");
  return RunConfig::parse("", overrides);
}

Outcome ac6() {
  bool pass = true;
  int checked = 0;
  std::string detail;
  std::vector<std::string> failures_seen;
  std::vector<std::string> empties;
  auto scan = [&](const json& cells, const std::string& where, bool beta1_only) {
    for (const auto& c : cells) {
      if (c["incoming"] == "s_matrix") continue;
      const int beta = c["beta"].get<int>();
      if (beta1_only != (beta == 1)) continue;
      const std::string name = where + " " + c["kind"].get<std::string>() + (c["side"] == -1 ? "-" : "+") + " " +
                               c["incoming"].get<std::string>() + " b" + std::to_string(beta);
      if (c["status"] == "empty domain") {
        empties.push_back(name);
        continue;
      }
      if (c["status"] != "ok") {
        pass = false;
        failures_seen.push_back(name + " (" + c["status"].get<std::string>() + ")");
        continue;
      }
      ++checked;
      bool ok;
      if (c["incoming"] == "dark_at_critical_q") {
        const double a = c["measured_power"].get<double>();
        ok = a >= -1.1 && a <= -0.4 && c["log_power_matches"].get<bool>();
        if (!ok) failures_seen.push_back(name + " power " + f(a));
      } else {
        ok = c["log_power_matches"].get<bool>();
        if (!ok) failures_seen.push_back(name + " got " + c["fitted_class"].get<std::string>());
      }
      pass = pass && ok;
    }
  };
  const auto r0 = cli::cmd_scaling(scratch_config("p0", {}));
  scan(r0.report, "P=0", false);
  const auto r1 = cli::cmd_scaling(scratch_config("p55", {"P=[0.5,0.5]"}));
  scan(r1.report, "P=(.5,.5)", true);
  bool beta1 = false;
  for (const auto& c : r1.report)
    if (c.contains("beta") && c["beta"] == 1 && c["status"] == "ok") beta1 = true;
  pass = pass && beta1 && checked > 0;
  detail = std::to_string(checked) + " cells classified";
  double amin = INFINITY, amax = -INFINITY;
  for (const auto* r : {&r0.report, &r1.report})
    for (const auto& c : *r)
      if (c["incoming"] == "dark_at_critical_q" && c["status"] == "ok") {
        amin = std::min(amin, c["measured_power"].get<double>());
        amax = std::max(amax, c["measured_power"].get<double>());
      }
  detail += "; at-critical-q dE powers in [" + f(amin) + ", " + f(amax) + "] (required within [-1.1, -0.4])";
  if (!failures_seen.empty()) {
    detail += "; mismatches:";
    for (const auto& m : failures_seen) detail += " " + m + ";";
  }
  return {pass, detail};
}

Outcome ac7() {
  // the 2048^2 default misses 1e-3 deep in the band; 4096^2 resolves it
  const RunConfig cfg = scratch_config("verify", {"oracle.grid_n=4096"});
  const json d = cli::verify_dispersion(cfg);
  const json p = cli::verify_propagator(cfg);
  json c = cli::verify_critical_points(cfg);
  const RunConfig cfg2 = scratch_config("verify", {"P=[0.7,-1.9]"});
  const json c2 = cli::verify_critical_points(cfg2);
  double worst_d = 0, worst_p = 0;
  for (const auto& s : d["samples"]) worst_d = std::max(worst_d, s["abs_diff"].get<double>());
  for (const auto& s : p["samples"]) worst_p = std::max(worst_p, s["rel_diff"].get<double>());
  const bool pass = d["passed"].get<bool>() && p["passed"].get<bool>() && c["passed"].get<bool>() &&
                    c2["passed"].get<bool>();
  return {pass, "dispersion max |diff| = " + f(worst_d, 3) + " (<= 1e-4, " +
                    std::to_string(d["samples"].size()) + " p); propagator max rel diff = " + f(worst_p, 3) +
                    " (<= 1e-3, " + std::to_string(p["samples"].size()) + " (P,E)); critical points within one cell: " +
                    (c["passed"].get<bool>() && c2["passed"].get<bool>() ? "yes" : "no")};
}

Outcome ac8() {
  const auto model = std::make_shared<DispersionModel>(LatticeSpec{});
  const double b = model->spec().bz_half_width();
  std::mt19937_64 rng(20251016);
  std::uniform_real_distribution<double> UP(-b, b), UE(-2.5, 3.0), U1(-0.9, 0.9);
  int n_pos = 0, n_add = 0, n_s = 0, n_branch = 0, n_c4 = 0, n_orbit = 0;
  std::string bad;

  for (int k = 0; k < 200; ++k) {
    const Momentum2 p{UP(rng), UP(rng)};
    if (std::abs(p.norm() - 1.0) < 1e-3) continue;
    const ComplexEnergy e = model->dispersion(p);
    const ComplexEnergy r = model->dispersion({-p.ky, p.kx});
    if (std::abs(e.re - r.re) > 1e-9 * (1 + std::abs(e.re)) || std::abs(e.im - r.im) > 1e-9) bad += " C4(eps)";
    ++n_c4;
  }

  for (int k = 0; k < 6; ++k) {
    const Momentum2 P{UP(rng), UP(rng)};
    const LocalPropagator lp(PairBand(model, P));
    const PairBand& band = lp.band();
    for (const auto& c : lp.critical_points()) {
      // images of each orbit under the pair symmetries stay in the orbit
      for (const auto& g : band.symmetries())
        for (const auto& q : c.symmetry_orbit) {
          double best = INFINITY;
          for (const auto& o : c.symmetry_orbit) best = std::min(best, band.periodic_distance(g.apply(q), o));
          if (best > 1e-6) bad += " orbit";
          ++n_orbit;
        }
    }
    for (int j = 0; j < 4; ++j) {
      const double E = UE(rng);
      LocalPropagator::Evaluation ev;
      try {
        ev = lp.evaluate(E);
      } catch (const ConvergenceError&) {
        continue;  // at a critical energy by chance; not a property violation
      }
      for (const auto& Lb : ev.plus.L_by_domain) {
        if (Lb.imag() > 1e-12) bad += " positivity";
        ++n_pos;
      }
      const cplx sum = ev.plus.L_by_domain[0] + ev.plus.L_by_domain[1] + ev.plus.L_by_domain[2];
      if (std::abs(sum - ev.plus.L) > 1e-12 * (1 + std::abs(ev.plus.L))) bad += " additivity";
      ++n_add;
      const auto s = s_eigenvalue(ev, P, E);
      if (s.magnitude2 > 1.0 + 1e-6) bad += " |s|";
      ++n_s;
      if (std::abs(P.kx) < 1.8 && std::abs(P.ky) < 1.8) {
        const auto r = cross_section(IncomingState::photon_pair_symmetric(*model, P, E), ev);
        if (r.sigma_tot > 0 && std::abs(r.branching[0] + r.branching[1] + r.branching[2] - 1.0) > 1e-12)
          bad += " branching";
        ++n_branch;
      }
    }
  }

  // determinism of CSV output under thread counts
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    const int threads = i == 0 ? 1 : 4;
    RunConfig cfg = scratch_config("det" + std::to_string(threads),
                                   {"energy_window.lo=0.5", "energy_window.hi=2.1", "energy_window.n=9",
                                    "threads=" + std::to_string(threads)});
    omp_set_num_threads(threads);
    for (const auto& path : cli::cmd_smatrix(cfg).files) {
      std::ifstream in(path);
      std::ostringstream ss;
      ss << in.rdbuf();
      files[i] += ss.str();
    }
  }
  omp_set_num_threads(omp_get_num_procs());
  const bool deterministic = !files[0].empty() && files[0] == files[1];
  if (!deterministic) bad += " determinism";

  return {bad.empty(), "positivity " + std::to_string(n_pos) + ", additivity " + std::to_string(n_add) +
                           ", |s| " + std::to_string(n_s) + ", branching " + std::to_string(n_branch) +
                           ", C4(eps) " + std::to_string(n_c4) + ", orbit images " + std::to_string(n_orbit) +
                           ", CSV 1 vs 4 threads " + (deterministic ? "identical" : "DIFFER") +
                           (bad.empty() ? "" : "; violations:" + bad.substr(0, 200))};
}

}  // namespace

int main(int argc, char** argv) {
  // optional list of criteria to run, e.g. `acceptance 1 4`
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto want = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

  const std::pair<const char*, Outcome (*)()> all[] = {{"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4},
                                                       {"AC5", ac5}, {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}};
  for (int k = 0; k < 8; ++k)
    if (want(k + 1)) report(all[k].first, all[k].second);
  std::printf("%d of %zu criteria failed\n", failures, only.empty() ? std::size(all) : only.size());
  return failures == 0 ? 0 : 1;
}
