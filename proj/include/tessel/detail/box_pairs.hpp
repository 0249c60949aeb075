#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace tessel {

// Uniform spatial hash over bounding boxes. Each pair is reported once, by the
// cell holding the lower-left corner of the pair's box intersection.
template <class Fn>
void for_each_box_pair(const std::vector<Box>& boxes, double pad, Fn&& fn) {
  if (boxes.size() < 2) return;
  double cell = 0.0;
  for (const auto& b : boxes) cell = std::max({cell, b.width(), b.height()});
  cell = std::max(cell + 2 * pad, 1e-9);

  auto cell_of = [cell](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };
  auto pack = [](std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffull);
  };

  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  grid.reserve(boxes.size() * 2);
  for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
    const Box& b = boxes[i];
    for (auto cx = cell_of(b.lo.x - pad); cx <= cell_of(b.hi.x + pad); ++cx)
      for (auto cy = cell_of(b.lo.y - pad); cy <= cell_of(b.hi.y + pad); ++cy) grid[pack(cx, cy)].push_back(i);
  }
  for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
    const Box& a = boxes[i];
    for (auto cx = cell_of(a.lo.x - pad); cx <= cell_of(a.hi.x + pad); ++cx) {
      for (auto cy = cell_of(a.lo.y - pad); cy <= cell_of(a.hi.y + pad); ++cy) {
        auto it = grid.find(pack(cx, cy));
        if (it == grid.end()) continue;
        for (int j : it->second) {
          if (j <= i) continue;
          const Box& b = boxes[j];
          if (!a.overlaps(b, pad)) continue;
          // Report from the cell containing the padded intersection's corner.
          const double ix = std::max(a.lo.x, b.lo.x) - pad;
          const double iy = std::max(a.lo.y, b.lo.y) - pad;
          if (cell_of(ix) != cx || cell_of(iy) != cy) continue;
          fn(i, j);
        }
      }
    }
  }
}

}  // namespace tessel
