#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "support.hpp"
#include "tessel/errors.hpp"
#include "tessel/io.hpp"
#include "tessel/solve.hpp"

using namespace tessel;
using namespace testing_support;

namespace {

std::set<std::pair<int, int>> overlap_set(const AdjacencyGraph& g, const std::vector<int>& relabel = {}) {
  std::set<std::pair<int, int>> s;
  for (auto [i, k] : g.overlap_edges) {
    int a = relabel.empty() ? i : relabel[static_cast<std::size_t>(i)];
    int b = relabel.empty() ? k : relabel[static_cast<std::size_t>(k)];
    s.insert({std::min(a, b), std::max(a, b)});
  }
  return s;
}

std::set<std::tuple<int, int, long>> neighbor_set(const AdjacencyGraph& g, const std::vector<int>& relabel = {}) {
  std::set<std::tuple<int, int, long>> s;
  for (const auto& e : g.neighbor_edges) {
    int a = relabel.empty() ? e.a : relabel[static_cast<std::size_t>(e.a)];
    int b = relabel.empty() ? e.b : relabel[static_cast<std::size_t>(e.b)];
    s.insert({std::min(a, b), std::max(a, b), std::lround(e.length * 1e6)});
  }
  return s;
}

}  // namespace

TEST(Graph, TwoSideBySideSquares) {
  const Superset ss = build_superset(square_set(), 2);
  const auto& ts = ss.tileset;
  const AdjacencyGraph g = build_graph({make_placement(ts, 0, {}), make_placement(ts, 0, {0, {1, 0}})}, ss);
  EXPECT_EQ(g.neighbor_edges.size(), 1u);
  EXPECT_EQ(g.overlap_edges.size(), 0u);
  const auto e = g.edge_features();
  EXPECT_DOUBLE_EQ(e[0], 0.25);
  EXPECT_DOUBLE_EQ(mean_degree(g), 1.0);
}

TEST(Graph, CoincidentSquares) {
  const Superset ss = build_superset(square_set(), 2);
  const AdjacencyGraph g = build_graph({make_placement(ss.tileset, 0, {}), make_placement(ss.tileset, 0, {})}, ss);
  EXPECT_EQ(g.overlap_edges.size(), 1u);
  EXPECT_EQ(g.neighbor_edges.size(), 0u);
}

TEST(Graph, ThreeCollinearSquares) {
  const Superset ss = build_superset(square_set(), 2);
  std::vector<Placement> p;
  for (int i = 0; i < 3; ++i) p.push_back(make_placement(ss.tileset, 0, {0, {double(i), 0}}));
  const AdjacencyGraph g = build_graph(p, ss);
  EXPECT_EQ(g.neighbor_edges.size(), 2u);
  EXPECT_EQ(g.overlap_edges.size(), 0u);
}

TEST(Graph, MeanDegree) {
  const Superset ss = build_superset(square_set(), 1);
  EXPECT_DOUBLE_EQ(mean_degree(build_graph({make_placement(ss.tileset, 0, {})}, ss)), 0.0);
  EXPECT_THROW(mean_degree(build_graph({}, ss)), EmptyGraph);
}

TEST(Graph, CropExamples) {
  const Superset ss = build_superset(square_set(), 4);
  const Box b = ss.bounds();
  const Region hull{rect(b.lo.x, b.lo.y, b.width(), b.height()), {}};
  EXPECT_EQ(crop_superset(ss, hull).size(), ss.size());
  EXPECT_TRUE(crop_superset(ss, Region{rect(0.1, 0.1, 0.5, 0.5), {}}).empty());
  EXPECT_EQ(crop_superset(ss, Region{rect(0, 0, 2, 1), {}}).size(), 2u);
  // Posing the region by a lattice step keeps the count.
  EXPECT_EQ(crop_superset(ss, Region{rect(0, 0, 2, 1), {}}, {0, {1, 1}}).size(), 2u);
}

TEST(Graph, SpatialHashMatchesBruteForce) {
  std::mt19937_64 rng(4);
  for (const TileSet& ts : {square_domino_set(), tromino_set(), load_tileset_file(data_dir() + "/tilesets/triangle.json")}) {
    const Superset ss = build_superset(ts, ts.default_rings);
    const Region shape = load_region_file(data_dir() + "/shapes/heart.json");
    for (double size : {0.4, 0.7}) {
      const Region r = fit_region(shape, ss, size);
      const auto cand = crop_superset(ss, r);
      ASSERT_FALSE(cand.empty());
      const AdjacencyGraph fast = build_graph(cand, ss);
      GraphOptions bo;
      bo.brute_force = true;
      const AdjacencyGraph slow = build_graph(cand, ss, bo);
      EXPECT_EQ(overlap_set(fast), overlap_set(slow)) << ts.name;
      EXPECT_EQ(neighbor_set(fast), neighbor_set(slow)) << ts.name;
      // Direct pairwise check against the predicates.
      std::set<std::pair<int, int>> ovl;
      for (std::size_t i = 0; i < cand.size(); ++i)
        for (std::size_t k = i + 1; k < cand.size(); ++k)
          if (overlap_area(cand[i].polygon(), cand[k].polygon()) >= ts.tol.area)
            ovl.insert({static_cast<int>(i), static_cast<int>(k)});
      EXPECT_EQ(overlap_set(fast), ovl) << ts.name;
    }
  }
}

TEST(Graph, StableUnderInputPermutation) {
  const Superset ss = build_superset(square_domino_set(), 6);
  const Region r = fit_region(load_region_file(data_dir() + "/shapes/star.json"), ss, 0.6);
  const auto cand = crop_superset(ss, r);
  const AdjacencyGraph g = build_graph(cand, ss);
  std::vector<int> perm(cand.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(8);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Placement> shuffled;
  for (int i : perm) shuffled.push_back(cand[static_cast<std::size_t>(i)]);
  const AdjacencyGraph h = build_graph(shuffled, ss);
  // node j of h is node perm[j] of g
  EXPECT_EQ(overlap_set(h, perm), overlap_set(g));
  EXPECT_EQ(neighbor_set(h, perm), neighbor_set(g));
  std::map<std::pair<int, int>, int> pose_g;
  for (const auto& e : g.neighbor_edges) pose_g[{e.a, e.b}] = e.pose;
  for (const auto& e : h.neighbor_edges) {
    const int a = perm[static_cast<std::size_t>(e.a)], b = perm[static_cast<std::size_t>(e.b)];
    if (a < b) {
      EXPECT_EQ(pose_g.at({a, b}), e.pose);
    } else {
      // reversed orientation relative to g: look the relation up directly
      EXPECT_EQ(pose_index(ss, g.nodes[static_cast<std::size_t>(a)], g.nodes[static_cast<std::size_t>(b)]), e.pose);
    }
  }
}

TEST(Graph, FeaturesWellFormed) {
  const Superset ss = build_superset(tromino_set(), 3);
  const Region r = fit_region(load_region_file(data_dir() + "/shapes/blob.json"), ss, 0.7);
  const AdjacencyGraph g = build_graph(crop_superset(ss, r), ss);
  ASSERT_FALSE(g.empty());
  const auto v = g.node_features();
  const auto e = g.edge_features();
  const int dv = g.node_feature_dim(), de = g.edge_feature_dim();
  ASSERT_EQ(v.size(), g.size() * static_cast<std::size_t>(dv));
  ASSERT_EQ(e.size(), g.neighbor_edges.size() * static_cast<std::size_t>(de));
  for (double x : v) EXPECT_TRUE(x >= 0.0 && x <= 1.0);
  for (double x : e) EXPECT_TRUE(x >= 0.0 && x <= 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_DOUBLE_EQ(v[i * dv], g.nodes[i].area);
    double hot = 0;
    for (int t = 1; t < dv; ++t) hot += v[i * dv + t];
    EXPECT_EQ(hot, 1.0);
    EXPECT_EQ(v[i * dv + 1 + g.nodes[i].prototile], 1.0);
  }
  for (std::size_t j = 0; j < g.neighbor_edges.size(); ++j) {
    EXPECT_DOUBLE_EQ(e[j * de], g.neighbor_edges[j].length / g.max_perimeter);
    EXPECT_EQ(e[j * de + 1 + g.neighbor_edges[j].pose], 1.0);
  }
  // no self edges, disjoint edge sets
  std::set<std::pair<int, int>> nb;
  for (const auto& ed : g.neighbor_edges) {
    EXPECT_LT(ed.a, ed.b);
    nb.insert({ed.a, ed.b});
  }
  for (auto [i, k] : g.overlap_edges) {
    EXPECT_LT(i, k);
    EXPECT_EQ(nb.count({i, k}), 0u);
  }
}

TEST(Graph, InducedSubgraph) {
  const Superset ss = build_superset(square_set(), 2);
  std::vector<Placement> p;
  for (int i = 0; i < 4; ++i) p.push_back(make_placement(ss.tileset, 0, {0, {double(i), 0}}));
  const AdjacencyGraph g = build_graph(p, ss);
  const AdjacencyGraph h = induced_subgraph(g, {0, 2, 3});
  EXPECT_EQ(h.size(), 3u);
  ASSERT_EQ(h.neighbor_edges.size(), 1u);
  EXPECT_EQ(h.neighbor_edges[0].a, 1);
  EXPECT_EQ(h.neighbor_edges[0].b, 2);
}
