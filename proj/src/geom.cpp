#include "tessel/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tessel/errors.hpp"

namespace tessel {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

void Box::extend(Vec2 p) {
  lo.x = std::min(lo.x, p.x);
  lo.y = std::min(lo.y, p.y);
  hi.x = std::max(hi.x, p.x);
  hi.y = std::max(hi.y, p.y);
}

bool Box::overlaps(const Box& o, double pad) const {
  return lo.x <= o.hi.x + pad && o.lo.x <= hi.x + pad && lo.y <= o.hi.y + pad &&
         o.lo.y <= hi.y + pad;
}

bool Box::contains(const Box& o, double pad) const {
  return o.lo.x >= lo.x - pad && o.hi.x <= hi.x + pad && o.lo.y >= lo.y - pad &&
         o.hi.y <= hi.y + pad;
}

Tolerances Tolerances::for_quantum(double u) {
  Tolerances t;
  t.geo = 1e-6 * u;
  t.area = 1e-8 * u * u;
  t.snap = 1e-4 * u;
  t.angle = 1e-4;
  return t;
}

double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  // Values within float noise of 2pi wrap to zero.
  if (kTwoPi - r < 1e-12) r = 0.0;
  return r;
}

std::pair<double, double> clean_cos_sin(double angle) {
  auto clean = [](double v) {
    if (std::abs(v) < 1e-15) return 0.0;
    if (std::abs(v - 1.0) < 1e-15) return 1.0;
    if (std::abs(v + 1.0) < 1e-15) return -1.0;
    return v;
  };
  return {clean(std::cos(angle)), clean(std::sin(angle))};
}

Vec2 RigidTransform::apply(Vec2 p) const {
  auto [c, s] = clean_cos_sin(rotation);
  return {c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y};
}

RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner) {
  RigidTransform t;
  t.rotation = normalize_angle(outer.rotation + inner.rotation);
  t.translation = outer.apply(inner.translation);
  return t;
}

RigidTransform inverse(const RigidTransform& t) {
  RigidTransform inv;
  inv.rotation = normalize_angle(-t.rotation);
  auto [c, s] = clean_cos_sin(inv.rotation);
  inv.translation = {-(c * t.translation.x - s * t.translation.y),
                     -(s * t.translation.x + c * t.translation.y)};
  return inv;
}

double signed_area(std::span<const Vec2> pts) {
  const std::size_t n = pts.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = pts[i];
    const Vec2 b = pts[(i + 1) % n];
    acc += a.x * b.y - b.x * a.y;
  }
  return 0.5 * acc;
}

double polygon_area(const Polygon& p, double eps_area) {
  const double a = std::abs(signed_area(p.vertices));
  if (a < eps_area) throw DegeneratePolygon("area " + std::to_string(a) + " below tolerance");
  return a;
}

double perimeter(const Polygon& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += norm(p.edge_end(i) - p.edge_start(i));
  return acc;
}

Vec2 centroid(const Polygon& p) {
  const std::size_t n = p.size();
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 u = p.vertices[i];
    const Vec2 v = p.vertices[(i + 1) % n];
    const double w = u.x * v.y - v.x * u.y;
    a += w;
    cx += (u.x + v.x) * w;
    cy += (u.y + v.y) * w;
  }
  if (std::abs(a) < 1e-300) {
    Vec2 m{};
    for (auto v : p.vertices) m = m + v;
    return (1.0 / static_cast<double>(std::max<std::size_t>(n, 1))) * m;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

Box bounding_box(const Polygon& p) {
  Box b;
  for (auto v : p.vertices) b.extend(v);
  return b;
}

double shortest_edge(const Polygon& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) best = std::min(best, norm(p.edge_end(i) - p.edge_start(i)));
  return best;
}

Polygon apply_transform(const Polygon& p, const RigidTransform& t) {
  Polygon out;
  out.vertices.reserve(p.size());
  for (auto v : p.vertices) out.vertices.push_back(t.apply(v));
  return out;
}

Polygon reversed(const Polygon& p) {
  Polygon r = p;
  std::reverse(r.vertices.begin(), r.vertices.end());
  return r;
}

namespace {

double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

bool on_segment(Vec2 a, Vec2 b, Vec2 q, double eps) {
  const Vec2 d = b - a;
  const double len = norm(d);
  if (len == 0.0) return norm(q - a) <= eps;
  if (std::abs(cross(d, q - a)) / len > eps) return false;
  const double t = dot(q - a, d) / (len * len);
  return t >= -eps / len && t <= 1.0 + eps / len;
}

bool segments_touch(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double eps) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps)) &&
      ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps)))
    return true;
  return on_segment(a, b, c, eps) || on_segment(a, b, d, eps) || on_segment(c, d, a, eps) ||
         on_segment(c, d, b, eps);
}

double segment_distance(Vec2 q, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double l2 = dot(d, d);
  double t = l2 > 0 ? dot(q - a, d) / l2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(q - (a + t * d));
}

}  // namespace

bool is_simple(const Polygon& p, double eps) {
  const std::size_t n = p.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p.edge_start(i), b = p.edge_end(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 c = p.edge_start(j), d = p.edge_end(j);
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex is expected; the far endpoints must not fold back onto
        // the other edge.
        const Vec2 far_i = (j == i + 1) ? a : b;
        const Vec2 far_j = (j == i + 1) ? d : c;
        if (n == 3) continue;
        if (on_segment(c, d, far_i, eps) || on_segment(a, b, far_j, eps)) return false;
        continue;
      }
      if (segments_touch(a, b, c, d, eps)) return false;
    }
  }
  return true;
}

void validate_polygon(const Polygon& p, const Tolerances& tol) {
  if (p.size() < 3) throw InvalidPolygon("fewer than 3 vertices");
  for (auto v : p.vertices)
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InvalidPolygon("non-finite coordinate");
  const double a = signed_area(p.vertices);
  if (std::abs(a) < tol.area) throw DegeneratePolygon("zero area");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (norm(p.edge_end(i) - p.edge_start(i)) < tol.geo)
      throw InvalidPolygon("consecutive vertices closer than tolerance at index " + std::to_string(i));
  if (!is_simple(p, tol.geo * 1e-3)) throw InvalidPolygon("self-intersecting");
  if (a < 0) throw InvalidPolygon("vertices are clockwise");
}

std::vector<Triangle> triangulate(const Polygon& poly) {
  std::vector<Vec2> pts = poly.vertices;
  if (signed_area(pts) < 0) std::reverse(pts.begin(), pts.end());

  // Drop collinear vertices; they only produce zero-area ears.
  const double scale = std::max(bounding_box(poly).width(), bounding_box(poly).height());
  const double flat = 1e-14 * scale * scale;
  bool changed = true;
  while (changed && pts.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size() && pts.size() > 3; ++i) {
      const std::size_t n = pts.size();
      const Vec2 a = pts[(i + n - 1) % n], b = pts[i], c = pts[(i + 1) % n];
      if (std::abs(orient(a, b, c)) <= flat) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        --i;
      }
    }
  }

  std::vector<Triangle> tris;
  std::vector<std::size_t> idx(pts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  auto inside_strict = [&](Vec2 q, Vec2 a, Vec2 b, Vec2 c) {
    return orient(a, b, q) > flat && orient(b, c, q) > flat && orient(c, a, q) > flat;
  };
  auto on_tri = [&](Vec2 q, Vec2 a, Vec2 b, Vec2 c) {
    return orient(a, b, q) >= -flat && orient(b, c, q) >= -flat && orient(c, a, q) >= -flat;
  };

  while (idx.size() > 3) {
    const std::size_t n = idx.size();
    bool clipped = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = pts[idx[(i + n - 1) % n]], b = pts[idx[i]], c = pts[idx[(i + 1) % n]];
      if (orient(a, b, c) <= flat) continue;
      bool blocked = false;
      for (std::size_t j = 0; j < n && !blocked; ++j) {
        if (j == i || j == (i + 1) % n || j == (i + n - 1) % n) continue;
        const Vec2 q = pts[idx[j]];
        if (q == a || q == b || q == c) continue;
        if (inside_strict(q, a, b, c) || on_tri(q, a, b, c)) blocked = true;
      }
      if (blocked) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) {
      // Numerical dead end: clip the most convex vertex.
      std::size_t best = 0;
      double best_o = -1e300;
      for (std::size_t i = 0; i < n; ++i) {
        const double o = orient(pts[idx[(i + n - 1) % n]], pts[idx[i]], pts[idx[(i + 1) % n]]);
        if (o > best_o) best_o = o, best = i;
      }
      tris.push_back({pts[idx[(best + n - 1) % n]], pts[idx[best]], pts[idx[(best + 1) % n]]});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }
  if (idx.size() == 3) tris.push_back({pts[idx[0]], pts[idx[1]], pts[idx[2]]});
  return tris;
}

double convex_intersection_area(const Triangle& a, const Triangle& b) {
  // Sutherland-Hodgman: clip a against the three half-planes of b.
  std::array<Vec2, 12> buf_in{}, buf_out{};
  std::size_t n_in = 3;
  for (std::size_t i = 0; i < 3; ++i) buf_in[i] = a[i];
  for (std::size_t e = 0; e < 3 && n_in > 0; ++e) {
    const Vec2 p0 = b[e], p1 = b[(e + 1) % 3];
    const Vec2 d = p1 - p0;
    std::size_t n_out = 0;
    for (std::size_t i = 0; i < n_in; ++i) {
      const Vec2 cur = buf_in[i];
      const Vec2 nxt = buf_in[(i + 1) % n_in];
      const double sc = cross(d, cur - p0);
      const double sn = cross(d, nxt - p0);
      if (sc >= 0) buf_out[n_out++] = cur;
      if ((sc >= 0) != (sn >= 0)) {
        const double t = sc / (sc - sn);
        buf_out[n_out++] = cur + t * (nxt - cur);
      }
    }
    std::swap(buf_in, buf_out);
    n_in = n_out;
  }
  if (n_in < 3) return 0.0;
  return std::max(0.0, signed_area(std::span<const Vec2>(buf_in.data(), n_in)));
}

namespace {

Box triangle_box(const Triangle& t) {
  Box b;
  for (auto v : t) b.extend(v);
  return b;
}

}  // namespace

PreparedPolygon::PreparedPolygon(Polygon p) : PreparedPolygon(p, triangulate(p)) {}

PreparedPolygon::PreparedPolygon(Polygon p, std::vector<Triangle> tris)
    : polygon(std::move(p)), triangles(std::move(tris)) {
  box = bounding_box(polygon);
  area = std::abs(signed_area(polygon.vertices));
  triangle_boxes.reserve(triangles.size());
  for (const auto& t : triangles) triangle_boxes.push_back(triangle_box(t));
}

double overlap_area(const PreparedPolygon& a, const PreparedPolygon& b) {
  if (!a.box.overlaps(b.box)) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.triangles.size(); ++i) {
    if (!a.triangle_boxes[i].overlaps(b.box)) continue;
    for (std::size_t j = 0; j < b.triangles.size(); ++j) {
      if (!a.triangle_boxes[i].overlaps(b.triangle_boxes[j])) continue;
      acc += convex_intersection_area(a.triangles[i], b.triangles[j]);
    }
  }
  return acc;
}

double overlap_area(const Polygon& a, const Polygon& b) {
  return overlap_area(PreparedPolygon(a), PreparedPolygon(b));
}

double shared_boundary_length(const Polygon& a, const Polygon& b, double eps_geo) {
  const Box ba = bounding_box(a), bb = bounding_box(b);
  if (!ba.overlaps(bb, eps_geo)) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec2 p0 = a.edge_start(i), p1 = a.edge_end(i);
    const double la = norm(p1 - p0);
    if (la <= eps_geo) continue;
    const Vec2 d = (1.0 / la) * (p1 - p0);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const Vec2 q0 = b.edge_start(j), q1 = b.edge_end(j);
      if (std::abs(cross(d, q0 - p0)) > eps_geo || std::abs(cross(d, q1 - p0)) > eps_geo) continue;
      const double t0 = dot(q0 - p0, d), t1 = dot(q1 - p0, d);
      const double lo = std::max(0.0, std::min(t0, t1));
      const double hi = std::min(la, std::max(t0, t1));
      if (hi - lo > eps_geo) total += hi - lo;
    }
  }
  return total;
}

bool point_in_polygon(Vec2 q, const Polygon& p) {
  bool inside = false;
  const std::size_t n = p.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = p.vertices[i], b = p.vertices[j];
    if ((a.y > q.y) != (b.y > q.y)) {
      const double x = (b.x - a.x) * (q.y - a.y) / (b.y - a.y) + a.x;
      if (q.x < x) inside = !inside;
    }
  }
  return inside;
}

double distance_to_boundary(Vec2 q, const Polygon& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) best = std::min(best, segment_distance(q, p.edge_start(i), p.edge_end(i)));
  return best;
}

PreparedRegion::PreparedRegion(Region r) : region(std::move(r)) {
  outer = PreparedPolygon(region.outer);
  for (const auto& h : region.holes) {
    Polygon ccw = h;
    if (signed_area(ccw.vertices) < 0) ccw = reversed(ccw);
    holes.emplace_back(std::move(ccw));
  }
}

bool region_contains(const PreparedRegion& r, const PreparedPolygon& p, double tol) {
  if (!r.outer.box.contains(p.box, tol)) return false;
  for (auto v : p.polygon.vertices) {
    if (!point_in_polygon(v, r.outer.polygon) && distance_to_boundary(v, r.outer.polygon) > tol) return false;
    for (const auto& h : r.holes)
      if (h.box.overlaps(p.box) && point_in_polygon(v, h.polygon) &&
          distance_to_boundary(v, h.polygon) > tol)
        return false;
  }
  // A thin spike of the boundary can enter the tile with negligible area.
  auto pokes_in = [&](const PreparedPolygon& q) {
    if (!q.box.overlaps(p.box)) return false;
    for (auto v : q.polygon.vertices)
      if (p.box.contains(Box{v, v}) && point_in_polygon(v, p.polygon) && distance_to_boundary(v, p.polygon) > tol)
        return true;
    return false;
  };
  if (pokes_in(r.outer)) return false;
  for (const auto& h : r.holes)
    if (pokes_in(h)) return false;
  double outside = p.area - overlap_area(p, r.outer);
  for (const auto& h : r.holes) outside += overlap_area(p, h);
  return outside <= tol * perimeter(p.polygon) + 1e-14;
}

bool region_contains(const Region& r, const Polygon& p, double tol) {
  return region_contains(PreparedRegion(r), PreparedPolygon(p), tol);
}

double region_area(const Region& r) {
  double a = std::abs(signed_area(r.outer.vertices));
  for (const auto& h : r.holes) a -= std::abs(signed_area(h.vertices));
  return a;
}

Region transform_region(const Region& r, const RigidTransform& t) {
  Region out;
  out.outer = apply_transform(r.outer, t);
  for (const auto& h : r.holes) out.holes.push_back(apply_transform(h, t));
  return out;
}

std::size_t CanonicalKeyHash::operator()(const CanonicalKey& k) const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (auto c : k.coords) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

CanonicalKey canonical_key(const Polygon& p, double tau) {
  const std::size_t n = p.size();
  std::vector<std::pair<std::int64_t, std::int64_t>> snapped(n);
  for (std::size_t i = 0; i < n; ++i)
    snapped[i] = {std::llround(p.vertices[i].x / tau), std::llround(p.vertices[i].y / tau)};
  std::size_t best = 0;
  for (std::size_t s = 1; s < n; ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& lhs = snapped[(s + k) % n];
      const auto& rhs = snapped[(best + k) % n];
      if (lhs < rhs) {
        best = s;
        break;
      }
      if (rhs < lhs) break;
    }
  }
  CanonicalKey key;
  key.coords.reserve(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    key.coords.push_back(snapped[(best + k) % n].first);
    key.coords.push_back(snapped[(best + k) % n].second);
  }
  return key;
}

}  // namespace tessel
