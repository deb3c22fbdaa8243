#include "arrayscat/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "arrayscat/errors.hpp"

namespace arrayscat {

using nlohmann::json;

std::vector<double> EnergyWindow::grid() const {
  std::vector<double> out;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

json RunConfig::defaults() {
  const oracle::OracleConfig oc;
  return json{
      {"lattice",
       {{"spacing", 0.2},
        {"polarization", "sigma_plus"},
        {"gamma0", 1.0},
        {"omega_eg_over_gamma0", 1e8},
        {"geometry", "square"}}},
      {"P", {0.0, 0.0}},
      {"energy_window", {{"lo", -1.0}, {"hi", 3.0}, {"n", 201}}},
      {"q_grid", 128},
      {"tolerances",
       {{"dispersion", {{"tolerance", 1e-6}}},
        {"critical", {{"grid_n", 256}, {"light_cone_margin", 1e-2}, {"dedup_tol", 1e-4}, {"gradient_tol", 1e-9}}},
        {"contour", {{"grid_n", 256}, {"tolerance", 1e-4}, {"exclusion_radius", 3e-2}}},
        {"propagator", {{"abs_tol", 1e-9}, {"rel_tol", 1e-7}, {"max_intervals", 20000}}}}},
      {"xsection", {{"a_alpha", {1.0, 1.0, 1.0}}, {"table_points", 241}, {"e_floor", -4.0}}},
      {"scaling", {{"dE_min", 1e-5}, {"dE_max", 1e-2}, {"points_per_decade", 2}}},
      {"oracle",
       {{"grid_n", oc.grid_n},
        {"eta_sequence", oc.eta_sequence},
        {"realspace_cutoff", oc.realspace_cutoff},
        {"direct_eta", oc.direct_eta},
        {"direct_levels", oc.direct_levels},
        {"samples", 20},
        {"seed", 20251016},
        {"critical_grid_n", 1024},
        {"tolerance_L", 1e-3},
        {"tolerance_dispersion", 1e-4}}},
      {"output_dir", "out"},
      {"format", "csv"},
      {"threads", 0}};
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

bool compatible(const json& def, const json& v, const std::string& path) {
  if (path == "lattice.polarization") return v.is_string() || v.is_array();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_boolean()) return v.is_boolean();
  return false;
}

void merge(json& base, const json& user, const std::string& prefix) {
  if (!user.is_object()) fail(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) fail(path, "unknown key");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge(slot, it.value(), path);
    } else {
      if (!compatible(slot, it.value(), path)) fail(path, "wrong type (" + std::string(it.value().type_name()) + ")");
      slot = it.value();
    }
  }
}

void apply_override(json& base, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) fail(item, "override must look like key.path=value");
  const std::string path = item.substr(0, eq), text = item.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &base;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) fail(path, "unknown key");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) fail(path, "cannot override a whole section");
  if (!compatible(*node, value, path)) fail(path, "wrong type (" + std::string(value.type_name()) + ")");
  *node = value;
}

double num(const json& j, const std::string& path) {
  const json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    node = &node->at(path.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node->get<double>();
}

int integer(const json& j, const std::string& path) {
  const double v = num(j, path);
  if (v != std::floor(v)) fail(path, "must be an integer");
  return static_cast<int>(v);
}

void require(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) fail(path, msg);
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::vector<std::string>& overrides) {
  json merged = defaults();
  if (!text.empty()) {
    json user;
    try {
      user = json::parse(text);
    } catch (const json::parse_error& e) {
      // nlohmann reports the byte offset; translate to line/column
      std::size_t line = 1, col = 1;
      for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                        ": " + e.what());
    }
    merge(merged, user, "");
  }
  for (const auto& o : overrides) apply_override(merged, o);

  RunConfig c;
  c.document = merged;
  const json& j = merged;

  c.lattice.spacing = num(j, "lattice.spacing");
  c.lattice.gamma0 = num(j, "lattice.gamma0");
  c.lattice.omega_eg_over_gamma0 = num(j, "lattice.omega_eg_over_gamma0");
  require(j["lattice"]["geometry"] == "square", "lattice.geometry", "only \"square\" is implemented");
  const json& pol = j["lattice"]["polarization"];
  if (pol.is_string()) {
    require(pol == "sigma_plus", "lattice.polarization", "expected \"sigma_plus\" or [[re, im] x 3]");
    c.lattice.polarization = LatticeSpec::sigma_plus();
  } else {
    require(pol.size() == 3, "lattice.polarization", "expected three [re, im] pairs");
    for (int k = 0; k < 3; ++k) {
      const json& e = pol[k];
      require(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(), "lattice.polarization",
              "expected three [re, im] pairs");
      c.lattice.polarization[k] = {e[0].get<double>(), e[1].get<double>()};
    }
  }
  try {
    c.lattice.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  }

  c.dispersion.tolerance = num(j, "tolerances.dispersion.tolerance");
  require(c.dispersion.tolerance > 0.0, "tolerances.dispersion.tolerance", "must be positive");

  require(j["P"].size() == 2 && j["P"][0].is_number() && j["P"][1].is_number(), "P", "expected [Px, Py]");
  c.P = {j["P"][0].get<double>(), j["P"][1].get<double>()};

  c.energy_window = {num(j, "energy_window.lo"), num(j, "energy_window.hi"), integer(j, "energy_window.n")};
  require(c.energy_window.n >= 1, "energy_window.n", "empty energy window");
  require(c.energy_window.hi >= c.energy_window.lo, "energy_window", "hi must be >= lo");
  require(c.energy_window.n == 1 || c.energy_window.hi > c.energy_window.lo, "energy_window",
          "several points need hi > lo");

  c.q_grid = integer(j, "q_grid");
  require(c.q_grid >= 8, "q_grid", "must be >= 8");

  c.critical.grid_n = integer(j, "tolerances.critical.grid_n");
  c.critical.light_cone_margin = num(j, "tolerances.critical.light_cone_margin");
  c.critical.dedup_tol = num(j, "tolerances.critical.dedup_tol");
  c.critical.gradient_tol = num(j, "tolerances.critical.gradient_tol");
  require(c.critical.grid_n >= 16, "tolerances.critical.grid_n", "must be >= 16");
  require(c.critical.light_cone_margin > 0.0 && c.critical.dedup_tol > 0.0 && c.critical.gradient_tol > 0.0,
          "tolerances.critical", "margins and tolerances must be positive");

  c.contour.grid_n = integer(j, "tolerances.contour.grid_n");
  c.contour.tolerance = num(j, "tolerances.contour.tolerance");
  c.contour.exclusion_radius = num(j, "tolerances.contour.exclusion_radius");
  require(c.contour.grid_n >= 16, "tolerances.contour.grid_n", "must be >= 16");
  require(c.contour.tolerance > 0.0 && c.contour.exclusion_radius > 0.0, "tolerances.contour",
          "tolerance and exclusion_radius must be positive");

  c.propagator.abs_tol = num(j, "tolerances.propagator.abs_tol");
  c.propagator.rel_tol = num(j, "tolerances.propagator.rel_tol");
  c.propagator.max_intervals = integer(j, "tolerances.propagator.max_intervals");
  require(c.propagator.abs_tol > 0.0 && c.propagator.rel_tol > 0.0, "tolerances.propagator",
          "tolerances must be positive");
  require(c.propagator.max_intervals >= 16, "tolerances.propagator.max_intervals", "must be >= 16");

  const json& aa = j["xsection"]["a_alpha"];
  require(aa.size() == 3, "xsection.a_alpha", "expected three values");
  for (int k = 0; k < 3; ++k) {
    require(aa[k].is_number(), "xsection.a_alpha", "expected numbers");
    c.xsection.a_alpha[k] = aa[k].get<double>();
  }
  c.xsection.table_points = integer(j, "xsection.table_points");
  c.xsection.e_floor = num(j, "xsection.e_floor");
  require(c.xsection.table_points >= 8, "xsection.table_points", "must be >= 8");

  c.scaling = {num(j, "scaling.dE_min"), num(j, "scaling.dE_max"), integer(j, "scaling.points_per_decade")};
  require(c.scaling.dE_min >= 1e-5 * (1 - 1e-12) && c.scaling.dE_max <= 1e-1 * (1 + 1e-12), "scaling",
          "window must lie within [1e-5, 1e-1]");
  require(c.scaling.dE_max >= 100.0 * c.scaling.dE_min * (1 - 1e-12), "scaling", "window must span >= 2 decades");
  require(c.scaling.per_decade >= 1, "scaling.points_per_decade", "must be >= 1");

  auto& v = c.verify;
  v.oracle.grid_n = integer(j, "oracle.grid_n");
  v.oracle.eta_sequence.clear();
  for (const auto& e : j["oracle"]["eta_sequence"]) {
    require(e.is_number(), "oracle.eta_sequence", "expected numbers");
    v.oracle.eta_sequence.push_back(e.get<double>());
  }
  v.oracle.realspace_cutoff = integer(j, "oracle.realspace_cutoff");
  v.oracle.direct_eta = num(j, "oracle.direct_eta");
  v.oracle.direct_levels = integer(j, "oracle.direct_levels");
  try {
    v.oracle.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("oracle: ") + e.what());
  }
  v.samples = integer(j, "oracle.samples");
  v.seed = static_cast<std::uint64_t>(num(j, "oracle.seed"));
  v.critical_grid_n = integer(j, "oracle.critical_grid_n");
  v.tolerance_L = num(j, "oracle.tolerance_L");
  v.tolerance_dispersion = num(j, "oracle.tolerance_dispersion");
  require(v.samples >= 1, "oracle.samples", "must be >= 1");
  require(v.critical_grid_n >= 64, "oracle.critical_grid_n", "must be >= 64");

  c.output_dir = j["output_dir"].get<std::string>();
  c.format = j["format"].get<std::string>();
  require(c.format == "csv" || c.format == "json", "format", "must be csv or json");
  c.threads = integer(j, "threads");
  require(c.threads >= 0, "threads", "must be >= 0");
  return c;
}

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse(text, overrides);
}

std::uint64_t RunConfig::hash() const {
  json j = document;
  j.erase("output_dir");
  j.erase("threads");
  const std::string s = j.dump();  // keys are sorted
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

}  // namespace arrayscat
