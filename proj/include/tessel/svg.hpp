#pragma once

#include <string>
#include <vector>

#include "tessel/solve.hpp"

namespace tessel {

struct SvgStyle {
  double width_px = 800.0;
  std::string shape_fill = "#c8c8c8";
  std::string candidate_fill = "#9ec5f0";
  std::string stroke = "#202020";
  std::vector<std::string> palette;  // per prototile; tile-set colors when empty
};

/// Gray target region, then the blue candidate union, then one path per
/// selected tile. Output bytes depend only on the inputs.
std::string render_svg(const Solution& sol, const Crop& crop, const TileSet& ts, const SvgStyle& style = {});

}  // namespace tessel
