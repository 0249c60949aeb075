#include "tessel/graph.hpp"

#include <algorithm>

#include "tessel/errors.hpp"

namespace tessel {

std::vector<double> AdjacencyGraph::node_features() const {
  const int dim = node_feature_dim();
  std::vector<double> f(nodes.size() * static_cast<std::size_t>(dim), 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    f[i * dim] = nodes[i].area;
    f[i * dim + 1 + static_cast<std::size_t>(nodes[i].prototile)] = 1.0;
  }
  return f;
}

std::vector<double> AdjacencyGraph::edge_features() const {
  const int dim = edge_feature_dim();
  std::vector<double> f(neighbor_edges.size() * static_cast<std::size_t>(dim), 0.0);
  for (std::size_t j = 0; j < neighbor_edges.size(); ++j) {
    f[j * dim] = neighbor_edges[j].length / max_perimeter;
    f[j * dim + 1 + static_cast<std::size_t>(neighbor_edges[j].pose)] = 1.0;
  }
  return f;
}

std::vector<Placement> crop_superset(const Superset& ss, const PreparedRegion& posed) {
  std::vector<Placement> out;
  const double tol = ss.tileset.tol.geo;
  for (const auto& p : ss.placements)
    if (region_contains(posed, p.shape, tol)) out.push_back(p);
  return out;
}

std::vector<Placement> crop_superset(const Superset& ss, const Region& r, const RigidTransform& pose) {
  return crop_superset(ss, PreparedRegion(transform_region(r, pose)));
}

AdjacencyGraph build_graph(std::vector<Placement> placements, const Superset& ss, const GraphOptions& opt) {
  const TileSet& ts = ss.tileset;
  AdjacencyGraph g;
  g.nodes = std::move(placements);
  g.type_count = static_cast<int>(ts.type_count());
  g.pose_count = static_cast<int>(ss.pose_count());
  g.max_perimeter = ts.max_perimeter;

  auto visit = [&](int i, int k) {
    const PairInfo info = classify_pair(ts, g.nodes[static_cast<std::size_t>(i)], g.nodes[static_cast<std::size_t>(k)]);
    if (info.relation == PairRelation::overlapping) {
      g.overlap_edges.emplace_back(i, k);
    } else if (info.relation == PairRelation::neighboring) {
      const PoseKey key = pose_key(ts, g.nodes[static_cast<std::size_t>(i)], g.nodes[static_cast<std::size_t>(k)], info.shared_length);
      const auto pose = ss.find_pose(key);
      if (!pose) throw PoseTableIncomplete("contact between nodes " + std::to_string(i) + " and " + std::to_string(k));
      g.neighbor_edges.push_back({i, k, info.shared_length, *pose});
    }
  };

  const int n = static_cast<int>(g.nodes.size());
  if (opt.brute_force) {
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) visit(i, k);
  } else {
    std::vector<Box> boxes;
    boxes.reserve(g.nodes.size());
    for (const auto& p : g.nodes) boxes.push_back(p.shape.box);
    for_each_box_pair(boxes, ts.tol.geo, visit);
  }
  std::sort(g.overlap_edges.begin(), g.overlap_edges.end());
  std::sort(g.neighbor_edges.begin(), g.neighbor_edges.end(),
            [](const NeighborEdge& x, const NeighborEdge& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  return g;
}

AdjacencyGraph induced_subgraph(const AdjacencyGraph& g, const std::vector<int>& keep) {
  AdjacencyGraph sub;
  sub.type_count = g.type_count;
  sub.pose_count = g.pose_count;
  sub.max_perimeter = g.max_perimeter;
  std::vector<int> remap(g.nodes.size(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    remap[static_cast<std::size_t>(keep[i])] = static_cast<int>(i);
    sub.nodes.push_back(g.nodes[static_cast<std::size_t>(keep[i])]);
  }
  for (auto [i, k] : g.overlap_edges) {
    const int a = remap[static_cast<std::size_t>(i)], b = remap[static_cast<std::size_t>(k)];
    if (a >= 0 && b >= 0) sub.overlap_edges.emplace_back(a, b);
  }
  for (const auto& e : g.neighbor_edges) {
    const int a = remap[static_cast<std::size_t>(e.a)], b = remap[static_cast<std::size_t>(e.b)];
    if (a >= 0 && b >= 0) sub.neighbor_edges.push_back({a, b, e.length, e.pose});
  }
  return sub;
}

double mean_degree(const AdjacencyGraph& g) {
  if (g.empty()) throw EmptyGraph("mean degree of an empty graph");
  return 2.0 * static_cast<double>(g.overlap_edges.size() + g.neighbor_edges.size()) / static_cast<double>(g.size());
}

}  // namespace tessel
