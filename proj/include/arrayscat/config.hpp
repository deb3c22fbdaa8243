#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "arrayscat/bands.hpp"
#include "arrayscat/lattice.hpp"
#include "arrayscat/oracle.hpp"
#include "arrayscat/propagator.hpp"

namespace arrayscat {

inline constexpr const char* kVersion = "0.1.0";

struct EnergyWindow {
  double lo = -1.0;
  double hi = 3.0;
  int n = 201;
  std::vector<double> grid() const;
};

struct ScalingWindow {
  double dE_min = 1e-5;
  double dE_max = 1e-2;
  int per_decade = 2;
};

struct XsectionSettings {
  std::array<double, 3> a_alpha{1.0, 1.0, 1.0};
  int table_points = 241;  // energies of the L(E) table behind q-maps
  double e_floor = -4.0;   // q-map pairs below this energy are not evaluated
};

struct VerifySettings {
  oracle::OracleConfig oracle;
  int samples = 20;
  std::uint64_t seed = 20251016;
  int critical_grid_n = 1024;
  double tolerance_L = 1e-3;           // relative
  double tolerance_dispersion = 1e-4;  // Gamma0
};

// Everything a CLI run depends on. Built from defaults, then a JSON file,
// then dot-path overrides; unknown keys are rejected.
struct RunConfig {
  LatticeSpec lattice;
  DispersionOptions dispersion;
  Momentum2 P;
  EnergyWindow energy_window;
  int q_grid = 128;
  CriticalSearchOptions critical;
  ContourOptions contour;
  PropagatorOptions propagator;
  XsectionSettings xsection;
  ScalingWindow scaling;
  VerifySettings verify;
  std::string output_dir = "out";
  std::string format = "csv";
  int threads = 0;

  nlohmann::json document;  // the merged configuration, echoed into outputs

  static nlohmann::json defaults();
  // `text` is a JSON document (may be empty); overrides are "a.b.c=value".
  static RunConfig parse(const std::string& text, const std::vector<std::string>& overrides = {});
  static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {});

  // FNV-1a of the merged configuration without run-local keys
  // (output_dir, threads).
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

}  // namespace arrayscat
