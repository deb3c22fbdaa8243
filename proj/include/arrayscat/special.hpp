#pragma once

#include "arrayscat/types.hpp"

namespace arrayscat::special {

// Complex error functions. Accurate to ~1e-13 relative in the half plane
// Re z >= 0 with moderate |Im z| (the region the lattice sums need); the
// left half plane is reached through erfc(-z) = 2 - erfc(z).
cplx erf(cplx z);
cplx erfc(cplx z);

// erf(z) / z, regular at z = 0.
cplx erf_over_z(cplx z);

}  // namespace arrayscat::special
