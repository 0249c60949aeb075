#include "tessel/boolean.hpp"

#include <cmath>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

namespace tessel {

namespace bg = boost::geometry;

namespace {

using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, false, true>;  // counterclockwise, closed
using BMulti = bg::model::multi_polygon<BPolygon>;

// Grid step rounded down to a power of two so dyadic coordinates stay exact.
double snapped(double v, double snap) {
  const double step = std::exp2(std::floor(std::log2(snap)));
  return std::round(v / step) * step;
}

void append_ring(BPolygon::ring_type& ring, const Polygon& p, double snap) {
  for (const Vec2& v : p.vertices) ring.emplace_back(snapped(v.x, snap), snapped(v.y, snap));
  ring.push_back(ring.front());
}

BPolygon to_boost(const Polygon& p, double snap) {
  BPolygon out;
  append_ring(out.outer(), p, snap);
  bg::correct(out);
  return out;
}

BMulti to_boost(const std::vector<Region>& regions, double snap) {
  BMulti m;
  for (const auto& r : regions) {
    BPolygon bp;
    append_ring(bp.outer(), r.outer, snap);
    for (const auto& h : r.holes) {
      bp.inners().emplace_back();
      append_ring(bp.inners().back(), h, snap);
    }
    bg::correct(bp);
    m.push_back(std::move(bp));
  }
  return m;
}

Polygon from_ring(const BPolygon::ring_type& ring) {
  Polygon p;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) p.vertices.push_back({ring[i].x(), ring[i].y()});
  return p;
}

std::vector<Region> from_boost(const BMulti& m) {
  std::vector<Region> out;
  for (const auto& bp : m) {
    Region r;
    r.outer = from_ring(bp.outer());
    for (const auto& h : bp.inners()) r.holes.push_back(from_ring(h));
    out.push_back(std::move(r));
  }
  return out;
}

// Pairwise merge tree keeps intermediate results small.
BMulti merge(std::vector<BMulti> parts) {
  if (parts.empty()) return {};
  while (parts.size() > 1) {
    std::vector<BMulti> next;
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      BMulti u;
      bg::union_(parts[i], parts[i + 1], u);
      next.push_back(std::move(u));
    }
    if (parts.size() % 2) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

}  // namespace

std::vector<Region> union_of(const std::vector<Polygon>& polys, double snap) {
  std::vector<BMulti> parts;
  parts.reserve(polys.size());
  for (const auto& p : polys) parts.push_back(BMulti{to_boost(p, snap)});
  return from_boost(merge(std::move(parts)));
}

std::vector<Region> difference_of(const std::vector<Region>& a, const std::vector<Region>& b, double snap) {
  BMulti out;
  bg::difference(to_boost(a, snap), to_boost(b, snap), out);
  return from_boost(out);
}

double total_area(const std::vector<Region>& regions) {
  double s = 0.0;
  for (const auto& r : regions) {
    s += std::abs(signed_area(r.outer.vertices));
    for (const auto& h : r.holes) s -= std::abs(signed_area(h.vertices));
  }
  return s;
}

}  // namespace tessel
