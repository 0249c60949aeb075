#include "tessel/svg.hpp"

#include <cstdio>

#include "tessel/boolean.hpp"

namespace tessel {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

struct Frame {
  Box box;
  double scale = 1.0;
  std::string x(double v) const { return num((v - box.lo.x) * scale); }
  std::string y(double v) const { return num((box.hi.y - v) * scale); }  // y axis points down in SVG
};

void ring(std::string& d, const Polygon& p, const Frame& f) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    d += i == 0 ? "M" : " L";
    d += f.x(p[i].x) + " " + f.y(p[i].y);
  }
  d += " Z";
}

std::string region_path(const Region& r, const Frame& f) {
  std::string d;
  ring(d, r.outer, f);
  for (const auto& h : r.holes) {
    d += " ";
    ring(d, h, f);
  }
  return d;
}

}  // namespace

std::string render_svg(const Solution& sol, const Crop& crop, const TileSet& ts, const SvgStyle& style) {
  Frame f;
  f.box = bounding_box(crop.region.outer);
  for (const auto& n : crop.graph.nodes) {
    f.box.extend(n.shape.box.lo);
    f.box.extend(n.shape.box.hi);
  }
  const double margin = 0.02 * std::max(f.box.width(), f.box.height());
  f.box.lo = f.box.lo - Vec2{margin, margin};
  f.box.hi = f.box.hi + Vec2{margin, margin};
  f.scale = style.width_px / f.box.width();
  const double h = f.box.height() * f.scale;

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(style.width_px) + "\" height=\"" +
         num(h) + "\" viewBox=\"0 0 " + num(style.width_px) + " " + num(h) + "\">\n";
  out += "<path class=\"shape\" fill=\"" + style.shape_fill + "\" fill-rule=\"evenodd\" stroke=\"none\" d=\"" +
         region_path(crop.region, f) + "\"/>\n";

  std::vector<Polygon> polys;
  for (const auto& n : crop.graph.nodes) polys.push_back(n.polygon());
  std::string cand;
  for (const auto& r : union_of(polys, 1e-7 * ts.max_perimeter)) {
    if (!cand.empty()) cand += " ";
    cand += region_path(r, f);
  }
  out += "<path class=\"candidates\" fill=\"" + style.candidate_fill + "\" fill-rule=\"evenodd\" stroke=\"none\" d=\"" +
         cand + "\"/>\n";

  const double stroke_w = 0.02 * ts.quantum * f.scale;
  for (const auto& p : sol.selected) {
    const auto k = static_cast<std::size_t>(p.prototile);
    const std::string& color =
        k < style.palette.size() ? style.palette[k] : ts.prototiles[k].color;
    std::string d;
    ring(d, p.polygon(), f);
    out += "<path class=\"tile\" fill=\"" + color + "\" stroke=\"" + style.stroke + "\" stroke-width=\"" +
           num(stroke_w) + "\" d=\"" + d + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace tessel
