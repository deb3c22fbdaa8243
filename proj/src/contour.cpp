#include "arrayscat/contour.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

namespace arrayscat {

namespace {

// Edge identifiers: horizontal edge (i,j)-(i+1,j) and vertical edge
// (i,j)-(i,j+1), packed into one key.
std::uint64_t edge_key(std::size_t i, std::size_t j, bool vertical) {
  return (static_cast<std::uint64_t>(i) << 33) | (static_cast<std::uint64_t>(j) << 1) | (vertical ? 1u : 0u);
}

}  // namespace

std::vector<std::vector<GridPoint>> MarchingSquares::extract(const std::vector<double>& values,
                                                             double level) const {
  auto at = [&](std::size_t i, std::size_t j) { return values[i * ny_ + j] - level; };
  auto crossing = [&](std::uint64_t key) {
    const std::size_t i = key >> 33, j = (key >> 1) & 0xffffffffu;
    const bool vertical = key & 1u;
    const std::size_t i2 = vertical ? i : i + 1, j2 = vertical ? j + 1 : j;
    const double a = at(i, j), b = at(i2, j2);
    const double t = (a == b) ? 0.5 : a / (a - b);
    const double xa = x0_ + i * hx_, ya = y0_ + j * hy_;
    const double xb = x0_ + i2 * hx_, yb = y0_ + j2 * hy_;
    return GridPoint{xa + t * (xb - xa), ya + t * (yb - ya)};
  };

  // segments as pairs of edge keys
  std::vector<std::pair<std::uint64_t, std::uint64_t>> segs;
  for (std::size_t i = 0; i + 1 < nx_; ++i) {
    for (std::size_t j = 0; j + 1 < ny_; ++j) {
      const double v00 = at(i, j), v10 = at(i + 1, j), v11 = at(i + 1, j + 1), v01 = at(i, j + 1);
      if (std::isnan(v00) || std::isnan(v10) || std::isnan(v11) || std::isnan(v01)) continue;
      const int code = (v00 > 0) | ((v10 > 0) << 1) | ((v11 > 0) << 2) | ((v01 > 0) << 3);
      if (code == 0 || code == 15) continue;
      const std::uint64_t bottom = edge_key(i, j, false), top = edge_key(i, j + 1, false);
      const std::uint64_t left = edge_key(i, j, true), right = edge_key(i + 1, j, true);
      const bool center_pos = 0.25 * (v00 + v10 + v11 + v01) > 0;
      switch (code) {
        case 1: case 14: segs.push_back({left, bottom}); break;
        case 2: case 13: segs.push_back({bottom, right}); break;
        case 3: case 12: segs.push_back({left, right}); break;
        case 4: case 11: segs.push_back({right, top}); break;
        case 6: case 9: segs.push_back({bottom, top}); break;
        case 7: case 8: segs.push_back({left, top}); break;
        case 5:
          if (center_pos) {
            segs.push_back({left, top});
            segs.push_back({bottom, right});
          } else {
            segs.push_back({left, bottom});
            segs.push_back({right, top});
          }
          break;
        case 10:
          if (center_pos) {
            segs.push_back({left, bottom});
            segs.push_back({right, top});
          } else {
            segs.push_back({left, top});
            segs.push_back({bottom, right});
          }
          break;
        default: break;
      }
    }
  }

  std::map<std::uint64_t, std::vector<std::size_t>> by_edge;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    by_edge[segs[s].first].push_back(s);
    by_edge[segs[s].second].push_back(s);
  }
  std::vector<char> used(segs.size(), 0);
  auto next_from = [&](std::uint64_t edge, std::size_t from) -> long {
    for (std::size_t s : by_edge[edge])
      if (s != from && !used[s]) return static_cast<long>(s);
    return -1;
  };

  std::vector<std::vector<GridPoint>> lines;
  for (std::size_t start = 0; start < segs.size(); ++start) {
    if (used[start]) continue;
    used[start] = 1;
    std::vector<std::uint64_t> chain{segs[start].first, segs[start].second};
    // extend forward from the tail, then backward from the head
    for (int pass = 0; pass < 2; ++pass) {
      std::size_t cur = start;
      for (;;) {
        const std::uint64_t tail = chain.back();
        const long nxt = next_from(tail, cur);
        if (nxt < 0) break;
        used[nxt] = 1;
        cur = static_cast<std::size_t>(nxt);
        chain.push_back(segs[cur].first == tail ? segs[cur].second : segs[cur].first);
        if (chain.back() == chain.front()) break;
      }
      if (chain.back() == chain.front()) break;
      std::reverse(chain.begin(), chain.end());
    }
    std::vector<GridPoint> line;
    line.reserve(chain.size());
    for (auto e : chain) line.push_back(crossing(e));
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace arrayscat
