#pragma once

#include <vector>

#include "tessel/geom.hpp"

namespace tessel {

// Polygon booleans for metrics and rendering only. Coordinates are snapped
// to a grid of `snap` first so shared edges merge cleanly.

std::vector<Region> union_of(const std::vector<Polygon>& polys, double snap);
std::vector<Region> difference_of(const std::vector<Region>& a, const std::vector<Region>& b, double snap);
double total_area(const std::vector<Region>& regions);

}  // namespace tessel
