#include "tessel/tileset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tessel/errors.hpp"

namespace tessel {

namespace {

double edge_angle(Vec2 a, Vec2 b) { return std::atan2(b.y - a.y, b.x - a.x); }

bool is_multiple(double x, double u) {
  const double r = x / u;
  return std::abs(r - std::round(r)) < 1e-6;
}

Polygon rotate_about(const Polygon& p, Vec2 c, double angle) {
  auto [cs, sn] = clean_cos_sin(angle);
  Polygon out;
  for (auto v : p.vertices) {
    const Vec2 d = v - c;
    out.vertices.push_back({c.x + cs * d.x - sn * d.y, c.y + sn * d.x + cs * d.y});
  }
  return out;
}

std::vector<double> find_self_rotations(const Polygon& p, double snap) {
  std::vector<double> out{0.0};
  const Vec2 c = centroid(p);
  const CanonicalKey base = canonical_key(p, snap);
  const double a0 = edge_angle(p.edge_start(0), p.edge_end(0));
  for (std::size_t s = 1; s < p.size(); ++s) {
    const double alpha = normalize_angle(edge_angle(p.edge_start(s), p.edge_end(s)) - a0);
    if (alpha == 0.0) continue;
    if (canonical_key(rotate_about(p, c, alpha), snap) != base) continue;
    bool dup = false;
    for (double o : out) dup = dup || std::abs(o - alpha) < 1e-9;
    if (!dup) out.push_back(alpha);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TileSet make_tileset(std::string name, std::vector<PrototileSpec> tiles, Symmetry sym, int default_rings) {
  if (tiles.empty()) throw TileSetError("tile set has no prototiles");
  if (!(sym.theta > 0 && sym.theta <= kTwoPi + 1e-9)) throw TileSetError("symmetry theta outside (0, 2pi]");
  if (!(sym.dx > 0 && sym.dy > 0)) throw TileSetError("symmetry dx, dy must be positive");
  if (default_rings < 0) throw TileSetError("default_rings must be >= 0");

  TileSet ts;
  ts.name = std::move(name);
  ts.symmetry = sym;
  ts.default_rings = default_rings;

  double u = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (tiles[i].polygon.size() < 3) throw TileSetError("prototile " + std::to_string(i) + ": fewer than 3 vertices");
    u = std::min(u, shortest_edge(tiles[i].polygon));
  }
  if (!(u > 0)) throw TileSetError("shortest prototile edge is zero");
  ts.quantum = u;
  ts.tol = Tolerances::for_quantum(u);

  for (std::size_t i = 0; i < tiles.size(); ++i) {
    try {
      validate_polygon(tiles[i].polygon, ts.tol);
    } catch (const error& e) {
      throw TileSetError("prototile " + std::to_string(i) + ": " + e.what());
    }
    Prototile pt;
    pt.polygon = tiles[i].polygon;
    pt.color = tiles[i].color;
    pt.triangles = triangulate(pt.polygon);
    pt.centroid = centroid(pt.polygon);
    pt.area = polygon_area(pt.polygon, ts.tol.area);
    pt.perimeter = perimeter(pt.polygon);
    pt.self_rotations = find_self_rotations(pt.polygon, ts.tol.snap);
    ts.prototiles.push_back(std::move(pt));
  }
  ts.max_area = 0.0;
  ts.max_perimeter = 0.0;
  for (const auto& p : ts.prototiles) {
    ts.max_area = std::max(ts.max_area, p.area);
    ts.max_perimeter = std::max(ts.max_perimeter, p.perimeter);
  }
  return ts;
}

TileSet load_tileset(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("tile set descriptor at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    std::vector<PrototileSpec> tiles;
    for (const auto& jt : doc.at("prototiles")) {
      PrototileSpec spec;
      for (const auto& v : jt.at("vertices")) {
        if (!v.is_array() || v.size() != 2) throw ParseError("vertex must be [x, y]");
        spec.polygon.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
      }
      if (jt.contains("color")) spec.color = jt["color"].get<std::string>();
      tiles.push_back(std::move(spec));
    }
    Symmetry sym;
    if (doc.contains("symmetry")) {
      const auto& js = doc["symmetry"];
      sym.theta = js.at("theta").get<double>();
      sym.dx = js.at("dx").get<double>();
      sym.dy = js.at("dy").get<double>();
    }
    const int rings = doc.value("default_rings", 4);
    return make_tileset(doc.at("name").get<std::string>(), std::move(tiles), sym, rings);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tile set descriptor: ") + e.what());
  }
}

TileSet load_tileset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open tile set file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_tileset(ss.str());
}

Placement make_placement(const TileSet& ts, int prototile, RigidTransform t) {
  const Prototile& pt = ts.prototiles.at(static_cast<std::size_t>(prototile));
  t.rotation = normalize_angle(t.rotation);
  if (pt.self_rotations.size() > 1) {
    // Canonical representative: smallest equivalent rotation.
    double best = t.rotation;
    for (double alpha : pt.self_rotations) {
      const double cand = normalize_angle(t.rotation + alpha);
      if (cand < best - 1e-9) best = cand;
    }
    if (best != t.rotation) {
      RigidTransform old_rot{t.rotation, {}};
      RigidTransform new_rot{best, {}};
      const Vec2 shift = old_rot.apply(pt.centroid) - new_rot.apply(pt.centroid);
      t.translation = t.translation + shift;
      t.rotation = best;
    }
  }
  Placement p;
  p.prototile = prototile;
  p.transform = t;
  Polygon poly = apply_transform(pt.polygon, t);
  std::vector<Triangle> tris;
  tris.reserve(pt.triangles.size());
  for (const auto& tri : pt.triangles) tris.push_back({t.apply(tri[0]), t.apply(tri[1]), t.apply(tri[2])});
  p.shape = PreparedPolygon(std::move(poly), std::move(tris));
  p.area = pt.area / ts.max_area;
  return p;
}

Placement translated(const TileSet& ts, const Placement& p, Vec2 offset) {
  RigidTransform t = p.transform;
  t.translation = t.translation + offset;
  return make_placement(ts, p.prototile, t);
}

PlacementKey placement_key(const TileSet& ts, const Placement& p) {
  return {p.prototile, canonical_key(p.polygon(), ts.tol.snap)};
}

PoseKey pose_key(const TileSet& ts, const Placement& a, const Placement& b, double shared_length) {
  const RigidTransform rel = compose(inverse(a.transform), b.transform);
  PoseKey k;
  k.from = a.prototile;
  k.to = b.prototile;
  k.rotation = std::llround(normalize_angle(rel.rotation) / ts.tol.angle);
  if (k.rotation == std::llround(kTwoPi / ts.tol.angle)) k.rotation = 0;
  k.tx = std::llround(rel.translation.x / ts.tol.snap);
  k.ty = std::llround(rel.translation.y / ts.tol.snap);
  k.length = std::llround(shared_length / ts.tol.snap);
  return k;
}

PairInfo classify_pair(const TileSet& ts, const Placement& a, const Placement& b) {
  PairInfo info;
  if (!a.shape.box.overlaps(b.shape.box, ts.tol.geo)) return info;
  if (overlap_area(a.shape, b.shape) >= ts.tol.area) {
    info.relation = PairRelation::overlapping;
    return info;
  }
  const double len = shared_boundary_length(a.polygon(), b.polygon(), ts.tol.geo);
  if (len >= ts.min_contact()) {
    info.relation = PairRelation::neighboring;
    info.shared_length = len;
  }
  return info;
}

std::vector<Placement> enumerate_neighbors(const Placement& seed, const TileSet& ts) {
  const double u = ts.quantum;
  const double eps = ts.tol.geo;
  std::vector<Placement> out;
  std::set<PlacementKey> seen;
  const Polygon& sp = seed.polygon();

  for (int k = 0; k < static_cast<int>(ts.prototiles.size()); ++k) {
    const Polygon& proto = ts.prototiles[static_cast<std::size_t>(k)].polygon;
    for (std::size_t ea = 0; ea < sp.size(); ++ea) {
      const Vec2 a0 = sp.edge_start(ea), a1 = sp.edge_end(ea);
      const double la = norm(a1 - a0);
      const Vec2 da = (1.0 / la) * (a1 - a0);
      for (std::size_t eb = 0; eb < proto.size(); ++eb) {
        const Vec2 b0 = proto.edge_start(eb), b1 = proto.edge_end(eb);
        const double lb = norm(b1 - b0);
        // Rotate so the neighbor edge runs against the seed edge.
        const double rot = normalize_angle(std::atan2(da.y, da.x) + kTwoPi / 2 - edge_angle(b0, b1));
        const RigidTransform r{rot, {}};
        const Vec2 b1r = r.apply(b1);

        // s: position of b1 along the seed edge; the neighbor edge covers
        // [s, s + lb] measured from a0.
        std::vector<double> offsets;
        const double lo = std::min(0.0, la - lb), hi = std::max(0.0, la - lb);
        offsets.push_back(0.0);
        offsets.push_back(la - lb);
        const double shorter = std::min(la, lb);
        if (is_multiple(shorter, u)) {
          for (double m = u; m < hi - lo - eps; m += u) {
            offsets.push_back(lo + m);
            offsets.push_back(hi - m);
          }
        }
        std::sort(offsets.begin(), offsets.end());
        offsets.erase(std::unique(offsets.begin(), offsets.end(),
                                  [eps](double x, double y) { return std::abs(x - y) <= eps; }),
                      offsets.end());

        for (double s : offsets) {
          const Vec2 anchor = a0 + s * da;
          RigidTransform t{rot, anchor - b1r};
          Placement cand = make_placement(ts, k, t);
          if (overlap_area(seed.shape, cand.shape) >= ts.tol.area) continue;
          if (shared_boundary_length(sp, cand.polygon(), eps) < ts.min_contact()) continue;
          if (!seen.insert(placement_key(ts, cand)).second) continue;
          out.push_back(std::move(cand));
        }
      }
    }
  }
  return out;
}

std::optional<int> Superset::find_pose(const PoseKey& k) const {
  auto it = std::lower_bound(poses.begin(), poses.end(), k);
  if (it == poses.end() || !(*it == k)) return std::nullopt;
  return static_cast<int>(it - poses.begin());
}

Box Superset::bounds() const {
  Box b;
  for (const auto& p : placements) {
    b.extend(p.shape.box.lo);
    b.extend(p.shape.box.hi);
  }
  return b;
}

void rebuild_pose_table(Superset& ss) {
  const TileSet& ts = ss.tileset;
  std::vector<Box> boxes;
  boxes.reserve(ss.placements.size());
  for (const auto& p : ss.placements) boxes.push_back(p.shape.box);
  std::map<PoseKey, double> found;
  for_each_box_pair(boxes, ts.tol.geo, [&](int i, int j) {
    const Placement& a = ss.placements[static_cast<std::size_t>(i)];
    const Placement& b = ss.placements[static_cast<std::size_t>(j)];
    const PairInfo info = classify_pair(ts, a, b);
    if (info.relation != PairRelation::neighboring) return;
    found.emplace(pose_key(ts, a, b, info.shared_length), info.shared_length);
    found.emplace(pose_key(ts, b, a, info.shared_length), info.shared_length);
  });
  ss.poses.clear();
  ss.pose_lengths.clear();
  for (const auto& [k, len] : found) {
    ss.poses.push_back(k);
    ss.pose_lengths.push_back(len);
  }
}

namespace {

void sort_placements(Superset& ss) {
  std::vector<std::pair<PlacementKey, std::size_t>> order;
  order.reserve(ss.placements.size());
  for (std::size_t i = 0; i < ss.placements.size(); ++i)
    order.emplace_back(placement_key(ss.tileset, ss.placements[i]), i);
  std::sort(order.begin(), order.end());
  std::vector<Placement> sorted;
  std::vector<int> gen;
  sorted.reserve(order.size());
  for (const auto& [key, i] : order) {
    sorted.push_back(std::move(ss.placements[i]));
    gen.push_back(ss.generation[i]);
  }
  ss.placements = std::move(sorted);
  ss.generation = std::move(gen);
}

}  // namespace

Superset build_superset(const TileSet& ts, const SupersetOptions& opt) {
  if (opt.rings < 0) throw TileSetError("rings must be >= 0");
  Superset ss;
  ss.tileset = ts;

  std::map<PlacementKey, std::size_t> seen;
  // Neighbor sets depend only on the seed's prototile and rotation; cache them
  // relative to a seed at the origin.
  std::map<std::pair<int, std::int64_t>, std::vector<Placement>> relative;

  auto add = [&](Placement p, int gen) -> bool {
    auto key = placement_key(ts, p);
    if (seen.count(key)) return false;
    seen.emplace(std::move(key), ss.placements.size());
    ss.placements.push_back(std::move(p));
    ss.generation.push_back(gen);
    if (ss.placements.size() > opt.cap)
      throw SupersetTooLarge(std::to_string(ss.placements.size()) + " placements exceed cap " + std::to_string(opt.cap));
    return true;
  };

  add(make_placement(ts, 0, RigidTransform{}), 0);
  std::vector<std::size_t> frontier{0};
  std::mt19937_64 rng(opt.shuffle_seed.value_or(0));

  for (int g = 1; g <= opt.rings && !frontier.empty(); ++g) {
    if (opt.shuffle_seed) std::shuffle(frontier.begin(), frontier.end(), rng);
    std::vector<std::size_t> next;
    for (std::size_t idx : frontier) {
      const Placement seed = ss.placements[idx];
      const std::pair<int, std::int64_t> rkey{seed.prototile, std::llround(seed.transform.rotation / ts.tol.angle)};
      auto it = relative.find(rkey);
      if (it == relative.end()) {
        Placement origin = make_placement(ts, seed.prototile, {seed.transform.rotation, {}});
        it = relative.emplace(rkey, enumerate_neighbors(origin, ts)).first;
      }
      for (const Placement& rel : it->second) {
        if (add(translated(ts, rel, seed.transform.translation), g)) next.push_back(ss.placements.size() - 1);
      }
    }
    frontier = std::move(next);
  }
  sort_placements(ss);
  rebuild_pose_table(ss);
  return ss;
}

Superset build_superset(const TileSet& ts, int rings) {
  SupersetOptions opt;
  opt.rings = rings;
  return build_superset(ts, opt);
}

Superset sweep_superset(const TileSet& ts, const Box& window) {
  Superset ss;
  ss.tileset = ts;
  std::set<PlacementKey> seen;
  const int turns = std::max(1, static_cast<int>(std::lround(kTwoPi / ts.symmetry.theta)));
  const double pad = ts.tol.geo;
  for (int k = 0; k < static_cast<int>(ts.prototiles.size()); ++k) {
    for (int r = 0; r < turns; ++r) {
      const Placement base = make_placement(ts, k, {r * ts.symmetry.theta, {}});
      const Box b = base.shape.box;
      const auto i0 = static_cast<long>(std::floor((window.lo.x - b.lo.x) / ts.symmetry.dx)) - 1;
      const auto i1 = static_cast<long>(std::ceil((window.hi.x - b.hi.x) / ts.symmetry.dx)) + 1;
      const auto j0 = static_cast<long>(std::floor((window.lo.y - b.lo.y) / ts.symmetry.dy)) - 1;
      const auto j1 = static_cast<long>(std::ceil((window.hi.y - b.hi.y) / ts.symmetry.dy)) + 1;
      for (long i = i0; i <= i1; ++i) {
        for (long j = j0; j <= j1; ++j) {
          Placement p = translated(ts, base, {static_cast<double>(i) * ts.symmetry.dx, static_cast<double>(j) * ts.symmetry.dy});
          if (!window.contains(p.shape.box, pad)) continue;
          if (!seen.insert(placement_key(ts, p)).second) continue;
          ss.placements.push_back(std::move(p));
          ss.generation.push_back(-1);
        }
      }
    }
  }
  sort_placements(ss);
  rebuild_pose_table(ss);
  return ss;
}

int pose_index(const Superset& ss, const Placement& a, const Placement& b) {
  const PairInfo info = classify_pair(ss.tileset, a, b);
  if (info.relation != PairRelation::neighboring) throw NotNeighbors("placements do not contact along an edge");
  const auto idx = ss.find_pose(pose_key(ss.tileset, a, b, info.shared_length));
  if (!idx) throw PoseTableIncomplete("relative pose missing from the pose table");
  return *idx;
}

SymmetryReport check_symmetry_closure(const Superset& ss) {
  const TileSet& ts = ss.tileset;
  std::set<PlacementKey> keys;
  for (const auto& p : ss.placements) keys.insert(placement_key(ts, p));
  int max_gen = 0;
  for (int g : ss.generation) max_gen = std::max(max_gen, g);
  const int inner = max_gen / 2;

  // Rotation centers tried: the seed centroid, its vertices and edge midpoints.
  const Placement seed = make_placement(ts, 0, RigidTransform{});
  std::vector<Vec2> centers{centroid(seed.polygon())};
  for (std::size_t i = 0; i < seed.polygon().size(); ++i) {
    centers.push_back(seed.polygon()[i]);
    centers.push_back(0.5 * (seed.polygon().edge_start(i) + seed.polygon().edge_end(i)));
  }

  auto rotated = [&](const Placement& p, Vec2 c) {
    const RigidTransform about{ts.symmetry.theta, c - RigidTransform{ts.symmetry.theta, {}}.apply(c)};
    return make_placement(ts, p.prototile, compose(about, p.transform));
  };

  std::vector<std::size_t> inner_idx;
  for (std::size_t i = 0; i < ss.placements.size(); ++i)
    if (ss.generation[i] >= 0 && ss.generation[i] <= inner) inner_idx.push_back(i);

  SymmetryReport rep;
  rep.checked = inner_idx.size();
  std::size_t best_rot = inner_idx.size();
  for (Vec2 c : centers) {
    std::size_t miss = 0;
    for (std::size_t i : inner_idx)
      if (!keys.count(placement_key(ts, rotated(ss.placements[i], c)))) ++miss;
    best_rot = std::min(best_rot, miss);
    if (best_rot == 0) break;
  }
  rep.missing_rotation = best_rot;
  for (std::size_t i : inner_idx) {
    const Placement& p = ss.placements[i];
    if (!keys.count(placement_key(ts, translated(ts, p, {ts.symmetry.dx, 0.0})))) ++rep.missing_dx;
    if (!keys.count(placement_key(ts, translated(ts, p, {0.0, ts.symmetry.dy})))) ++rep.missing_dy;
  }
  return rep;
}

}  // namespace tessel
