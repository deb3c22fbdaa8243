#pragma once

#include <cstddef>
#include <vector>

namespace arrayscat {

struct GridPoint {
  double x = 0.0;
  double y = 0.0;
};

// Marching-squares iso-line extraction on a regular grid.
// values[i * ny + j] samples the field at (x0 + i*hx, y0 + j*hy); NaN marks
// masked nodes, and cells touching a masked node produce no segments.
// Segments are chained into polylines; closed loops repeat their first vertex.
class MarchingSquares {
 public:
  MarchingSquares(std::size_t nx, std::size_t ny, double x0, double y0, double hx, double hy)
      : nx_(nx), ny_(ny), x0_(x0), y0_(y0), hx_(hx), hy_(hy) {}

  std::vector<std::vector<GridPoint>> extract(const std::vector<double>& values, double level) const;

 private:
  std::size_t nx_, ny_;
  double x0_, y0_, hx_, hy_;
};

}  // namespace arrayscat
