#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tessel {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

struct Box {
  Vec2 lo{1e300, 1e300};
  Vec2 hi{-1e300, -1e300};

  void extend(Vec2 p);
  bool overlaps(const Box& o, double pad = 0.0) const;
  bool contains(const Box& o, double pad = 0.0) const;
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  Vec2 center() const { return {(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5}; }
};

// Simple polygon, counterclockwise. Holes of a Region are stored clockwise.
struct Polygon {
  std::vector<Vec2> vertices;

  std::size_t size() const { return vertices.size(); }
  Vec2 operator[](std::size_t i) const { return vertices[i]; }
  Vec2 edge_start(std::size_t i) const { return vertices[i]; }
  Vec2 edge_end(std::size_t i) const { return vertices[(i + 1) % vertices.size()]; }
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct Region {
  Polygon outer;
  std::vector<Polygon> holes;
};

struct RigidTransform {
  double rotation = 0.0;  // radians, [0, 2pi)
  Vec2 translation{};

  Vec2 apply(Vec2 p) const;
  friend bool operator==(const RigidTransform&, const RigidTransform&) = default;
};

using Triangle = std::array<Vec2, 3>;

// Tolerances scale with u, the shortest prototile edge.
struct Tolerances {
  double geo = 1e-6;
  double area = 1e-8;
  double snap = 1e-4;
  double angle = 1e-4;

  static Tolerances for_quantum(double u);
};

constexpr double kTwoPi = 6.283185307179586476925286766559;

double normalize_angle(double a);
// cos/sin with values within 1e-15 of {-1, 0, 1} snapped, so axis-aligned
// rotations produce clean coordinates.
std::pair<double, double> clean_cos_sin(double angle);

RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner);
RigidTransform inverse(const RigidTransform& t);

double signed_area(std::span<const Vec2> pts);
/// Shoelace area. Throws DegeneratePolygon when below eps_area.
double polygon_area(const Polygon& p, double eps_area = 1e-8);
double perimeter(const Polygon& p);
Vec2 centroid(const Polygon& p);
Box bounding_box(const Polygon& p);
double shortest_edge(const Polygon& p);

Polygon apply_transform(const Polygon& p, const RigidTransform& t);
Polygon reversed(const Polygon& p);

/// True when no two non-adjacent edges touch and adjacent edges meet only at
/// their shared vertex.
bool is_simple(const Polygon& p, double eps = 1e-12);
/// Throws InvalidPolygon / DegeneratePolygon if p is not a usable CCW polygon.
void validate_polygon(const Polygon& p, const Tolerances& tol = {});

/// Ear-clipping triangulation of a simple CCW polygon.
std::vector<Triangle> triangulate(const Polygon& p);
double convex_intersection_area(const Triangle& a, const Triangle& b);

// Polygon with cached triangulation and bounds, for repeated pair tests.
struct PreparedPolygon {
  Polygon polygon;
  std::vector<Triangle> triangles;
  std::vector<Box> triangle_boxes;
  Box box;
  double area = 0.0;

  PreparedPolygon() = default;
  explicit PreparedPolygon(Polygon p);
  PreparedPolygon(Polygon p, std::vector<Triangle> tris);
};

double overlap_area(const Polygon& a, const Polygon& b);
double overlap_area(const PreparedPolygon& a, const PreparedPolygon& b);

/// Length of collinear boundary overlap between two polygons. Point contacts
/// contribute nothing.
double shared_boundary_length(const Polygon& a, const Polygon& b, double eps_geo = 1e-6);

// Crossing-number point test; boundary points are not classified reliably,
// use distance_to_boundary for those.
bool point_in_polygon(Vec2 q, const Polygon& p);
double distance_to_boundary(Vec2 q, const Polygon& p);

struct PreparedRegion {
  Region region;
  PreparedPolygon outer;
  std::vector<PreparedPolygon> holes;  // stored CCW internally

  PreparedRegion() = default;
  explicit PreparedRegion(Region r);
};

/// p lies inside outer and outside every hole, allowing boundary contact of
/// width tol.
bool region_contains(const PreparedRegion& r, const PreparedPolygon& p, double tol);
bool region_contains(const Region& r, const Polygon& p, double tol);

double region_area(const Region& r);
Region transform_region(const Region& r, const RigidTransform& t);

struct CanonicalKey {
  std::vector<std::int64_t> coords;
  friend bool operator==(const CanonicalKey&, const CanonicalKey&) = default;
  friend auto operator<=>(const CanonicalKey&, const CanonicalKey&) = default;
};

struct CanonicalKeyHash {
  std::size_t operator()(const CanonicalKey& k) const noexcept;
};

/// Vertices snapped to a tau grid, then rotated to the lexicographically
/// smallest starting vertex.
CanonicalKey canonical_key(const Polygon& p, double tau);

}  // namespace tessel
