#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "arrayscat/config.hpp"

namespace arrayscat::cli {

struct CommandResult {
  std::vector<std::string> files;
  bool passed = true;  // verify only
  nlohmann::json report;
};

CommandResult cmd_bands(const RunConfig& cfg);
CommandResult cmd_smatrix(const RunConfig& cfg);
CommandResult cmd_xsection(const RunConfig& cfg);
CommandResult cmd_scaling(const RunConfig& cfg);
CommandResult cmd_verify(const RunConfig& cfg);

// Oracle batteries behind `verify`; each returns a JSON record with a
// "passed" flag and per-sample details.
nlohmann::json verify_dispersion(const RunConfig& cfg);
nlohmann::json verify_propagator(const RunConfig& cfg);
nlohmann::json verify_critical_points(const RunConfig& cfg);

// Full command-line entry point; returns the process exit code
// (0 ok, 1 other failure, 2 config/usage, 3 convergence, 4 verification).
int run(int argc, char** argv);

}  // namespace arrayscat::cli
