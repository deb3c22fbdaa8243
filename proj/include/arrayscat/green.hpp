#pragma once

#include "arrayscat/types.hpp"

namespace arrayscat {

// Free-space dyadic Green's function of the vector Helmholtz equation,
//   G(r) = e^{ir}/(4 pi r) [ (1 + i/r - 1/r^2) 1 + (-1 - 3i/r + 3/r^2) rhat rhat ],
// with lengths in units of 1/k0. Throws DomainError for r = 0 (the on-site
// term is handled by the lattice sums).
Mat3c dyadic_green(const Vec3& r);

// e1^* . G . e2
cplx project(const Mat3c& g, const Vec3c& e1, const Vec3c& e2);

}  // namespace arrayscat
