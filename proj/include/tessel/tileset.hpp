#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tessel/geom.hpp"

namespace tessel {

struct Prototile {
  Polygon polygon;
  std::string color = "#808080";
  std::vector<Triangle> triangles;
  // Rotations about the centroid that map the prototile onto itself; always
  // starts with 0.
  std::vector<double> self_rotations{0.0};
  Vec2 centroid{};
  double area = 0.0;
  double perimeter = 0.0;
};

struct Symmetry {
  double theta = kTwoPi;  // smallest rotation mapping the pattern onto itself
  double dx = 1.0;
  double dy = 1.0;
};

struct TileSet {
  std::string name;
  std::vector<Prototile> prototiles;
  double quantum = 1.0;  // u: shortest edge over all prototiles
  Symmetry symmetry;
  int default_rings = 4;
  Tolerances tol;
  double max_area = 1.0;
  double max_perimeter = 1.0;

  std::size_t type_count() const { return prototiles.size(); }
  double min_contact() const { return 0.5 * quantum; }
};

struct PrototileSpec {
  Polygon polygon;
  std::string color = "#808080";
};

/// Validates every prototile and derives u, areas, perimeters and
/// self-symmetries. Throws TileSetError.
TileSet make_tileset(std::string name, std::vector<PrototileSpec> tiles, Symmetry sym, int default_rings = 4);
/// Parses a JSON tile-set descriptor. Throws ParseError or TileSetError.
TileSet load_tileset(std::string_view json_text);
TileSet load_tileset_file(const std::string& path);

struct Placement {
  int prototile = 0;
  RigidTransform transform;
  PreparedPolygon shape;
  double area = 0.0;  // normalized by the largest prototile area, (0, 1]

  const Polygon& polygon() const { return shape.polygon; }
};

/// Builds a placement with the canonical transform: among the rotations that
/// realize the same geometry (prototile self-symmetries) the smallest angle
/// is kept, so equal geometry always carries equal transforms.
Placement make_placement(const TileSet& ts, int prototile, RigidTransform t);
Placement translated(const TileSet& ts, const Placement& p, Vec2 offset);

struct PlacementKey {
  int prototile = 0;
  CanonicalKey key;
  friend auto operator<=>(const PlacementKey&, const PlacementKey&) = default;
  friend bool operator==(const PlacementKey&, const PlacementKey&) = default;
};

PlacementKey placement_key(const TileSet& ts, const Placement& p);

// Geometric relation of an ordered contacting pair (from -> to), expressed in
// the frame of `from`, snapped to the tile-set tolerances.
struct PoseKey {
  int from = 0;
  int to = 0;
  std::int64_t rotation = 0;
  std::int64_t tx = 0;
  std::int64_t ty = 0;
  std::int64_t length = 0;
  friend auto operator<=>(const PoseKey&, const PoseKey&) = default;
  friend bool operator==(const PoseKey&, const PoseKey&) = default;
};

PoseKey pose_key(const TileSet& ts, const Placement& a, const Placement& b, double shared_length);

enum class PairRelation { unrelated, overlapping, neighboring };

struct PairInfo {
  PairRelation relation = PairRelation::unrelated;
  double shared_length = 0.0;
};

PairInfo classify_pair(const TileSet& ts, const Placement& a, const Placement& b);

/// Placements contacting `seed` along an edge segment without overlap: every
/// prototile, every edge pair, both flush alignments, plus slides in
/// multiples of u when both ends of the shorter edge land on the u grid.
std::vector<Placement> enumerate_neighbors(const Placement& seed, const TileSet& ts);

struct Superset {
  TileSet tileset;
  std::vector<Placement> placements;
  std::vector<int> generation;  // BFS ring index per placement, -1 when swept
  std::vector<PoseKey> poses;   // sorted
  std::vector<double> pose_lengths;

  std::size_t size() const { return placements.size(); }
  std::size_t pose_count() const { return poses.size(); }
  std::optional<int> find_pose(const PoseKey& k) const;
  Box bounds() const;
};

struct SupersetOptions {
  int rings = 4;
  std::size_t cap = 20000;
  // Shuffles processing order inside every generation; the result must not
  // depend on it.
  std::optional<std::uint64_t> shuffle_seed;
};

/// Breadth-first growth from prototile 0 at the identity. Placements are
/// returned sorted by (prototile, canonical key). Throws SupersetTooLarge.
Superset build_superset(const TileSet& ts, const SupersetOptions& opt);
Superset build_superset(const TileSet& ts, int rings);

/// Grid sweep: every symmetry orientation of every prototile translated over
/// multiples of (dx, dy), kept when its bounds lie within `window`.
Superset sweep_superset(const TileSet& ts, const Box& window);

/// Re-derives the pose table from all contacting pairs.
void rebuild_pose_table(Superset& ss);

/// Throws NotNeighbors when the pair does not contact along an edge, and
/// PoseTableIncomplete when the relation is missing from the table.
int pose_index(const Superset& ss, const Placement& a, const Placement& b);

/// Calls fn(i, j) for i < j whose bounding boxes overlap (padded).
template <class Fn>
void for_each_box_pair(const std::vector<Box>& boxes, double pad, Fn&& fn);

struct SymmetryReport {
  std::size_t checked = 0;
  std::size_t missing_dx = 0;
  std::size_t missing_dy = 0;
  std::size_t missing_rotation = 0;
};

/// Maps the inner generations (<= rings/2) through the declared symmetry and
/// counts images absent from the superset.
SymmetryReport check_symmetry_closure(const Superset& ss);

}  // namespace tessel

#include "tessel/detail/box_pairs.hpp"
