#pragma once

#include <utility>
#include <vector>

#include "tessel/geom.hpp"
#include "tessel/tileset.hpp"

namespace tessel {

struct NeighborEdge {
  int a = 0;  // a < b; the pose is the ordered relation a -> b
  int b = 0;
  double length = 0.0;
  int pose = 0;
};

struct AdjacencyGraph {
  std::vector<Placement> nodes;
  std::vector<std::pair<int, int>> overlap_edges;  // (i, k), i < k
  std::vector<NeighborEdge> neighbor_edges;
  int type_count = 0;  // N_t
  int pose_count = 0;  // N_p
  double max_perimeter = 1.0;  // L_max

  std::size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }
  int node_feature_dim() const { return type_count + 1; }
  int edge_feature_dim() const { return pose_count + 1; }

  /// Row i: [A_i | one-hot prototile].
  std::vector<double> node_features() const;
  /// Row j: [L_j / L_max | one-hot pose].
  std::vector<double> edge_features() const;
};

/// Superset placements lying fully inside `r` after posing it with `pose`.
std::vector<Placement> crop_superset(const Superset& ss, const Region& r, const RigidTransform& pose = {});
std::vector<Placement> crop_superset(const Superset& ss, const PreparedRegion& posed_region);

struct GraphOptions {
  // All-pairs classification instead of the spatial hash; debug oracle.
  bool brute_force = false;
};

/// Classifies every node pair as overlapping, neighboring or unrelated.
/// Throws PoseTableIncomplete when a contact matches no pose-table entry.
AdjacencyGraph build_graph(std::vector<Placement> placements, const Superset& ss, const GraphOptions& opt = {});

/// Graph restricted to `keep` (ascending node indices), renumbered in order.
AdjacencyGraph induced_subgraph(const AdjacencyGraph& g, const std::vector<int>& keep);

/// 2 (|E_ovl| + |E_nbr|) / N. Throws EmptyGraph.
double mean_degree(const AdjacencyGraph& g);

}  // namespace tessel
