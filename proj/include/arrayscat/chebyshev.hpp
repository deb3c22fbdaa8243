#pragma once

#include <functional>
#include <vector>

#include "arrayscat/types.hpp"

namespace arrayscat {

// Tensor-product Chebyshev series on [-1,1]^2,
//   f(u,v) = sum_{i,j<=n} c_ij T_i(u) T_j(v),
// built by interpolation at first-kind Chebyshev nodes.
class Chebyshev2D {
 public:
  Chebyshev2D() = default;

  static Chebyshev2D interpolate(const std::function<double(double, double)>& f, int degree);

  int degree() const { return n_; }
  double value(double u, double v) const;
  // f, df/du, df/dv and second derivatives (fx/fy slots hold u/v derivatives).
  Derivs2 derivs(double u, double v, bool second = true) const;

  // Sum of |c_ij| over the outermost two orders; a conservative bound on the
  // truncation error for geometrically convergent series.
  double tail_estimate() const;
  double coefficient(int i, int j) const { return c_[i * (n_ + 1) + j]; }

 private:
  int n_ = 0;
  std::vector<double> c_;  // row-major (i, j)
};

}  // namespace arrayscat
