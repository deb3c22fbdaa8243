#pragma once

#include <stdexcept>
#include <string>

namespace arrayscat {

// Argument outside the domain of a physical quantity (zero displacement,
// momentum exactly on the light cone, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A series or quadrature did not reach its tolerance. `residual` carries the
// last error estimate so callers can decide whether it is usable anyway.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// |L| vanished: T = -1/L is singular (possible two-excitation bound state).
class SingularTMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace arrayscat
