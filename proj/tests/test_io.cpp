#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>

#include "support.hpp"
#include "tessel/errors.hpp"
#include "tessel/io.hpp"
#include "tessel/svg.hpp"

using namespace tessel;
using namespace testing_support;

namespace {

std::map<PlacementKey, int> key_multiset(const Superset& ss) {
  std::map<PlacementKey, int> m;
  for (const auto& p : ss.placements) ++m[placement_key(ss.tileset, p)];
  return m;
}

int count_of(const std::string& s, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

const Superset& sd() {
  static const Superset ss = build_superset(square_domino_set(), 5);
  return ss;
}

}  // namespace

TEST(Io, SupersetRoundTrip) {
  for (const TileSet& ts : {square_domino_set(), tromino_set(), load_tileset_file(data_dir() + "/tilesets/triangle.json")}) {
    const Superset ss = build_superset(ts, 3);
    const Superset back = superset_from_bytes(superset_bytes(ss));
    EXPECT_EQ(key_multiset(back), key_multiset(ss));
    EXPECT_EQ(back.poses, ss.poses);
    EXPECT_EQ(back.generation, ss.generation);
    ASSERT_EQ(back.size(), ss.size());
    for (std::size_t i = 0; i < ss.size(); ++i) {
      EXPECT_EQ(back.placements[i].transform, ss.placements[i].transform);
      EXPECT_EQ(back.placements[i].polygon(), ss.placements[i].polygon());
    }
    EXPECT_EQ(superset_bytes(back), superset_bytes(ss));
  }
}

TEST(Io, SupersetFileRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "tessel_io_ss.tsup").string();
  save_superset(path, sd());
  EXPECT_EQ(key_multiset(load_superset(path)), key_multiset(sd()));
  std::filesystem::remove(path);
}

TEST(Io, CorruptHeaderNamesOffset) {
  std::string bytes = superset_bytes(sd());
  bytes[1] = '?';
  try {
    superset_from_bytes(bytes);
    FAIL() << "no error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  try {
    superset_from_bytes(std::string_view(bytes).substr(0, 6));
    FAIL() << "no error";
  } catch (const error& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  // truncated body
  const std::string good = superset_bytes(sd());
  EXPECT_THROW(superset_from_bytes(std::string_view(good).substr(0, good.size() / 2)), ParseError);
}

TEST(Io, FutureVersionRejected) {
  std::string bytes = superset_bytes(sd());
  bytes[4] = static_cast<char>(kSupersetVersion + 1);
  EXPECT_THROW(superset_from_bytes(bytes), VersionError);

  const Crop crop = make_crop(sd(), Region{rect(-1, -1, 2, 2), {}});
  nlohmann::json g = graph_json(crop.graph);
  g["version"] = kDocumentVersion + 1;
  EXPECT_THROW(graph_from_json(g, sd().tileset), VersionError);

  Solution s;
  nlohmann::json doc = solution_json(s, crop, sd().tileset, {});
  doc["version"] = kDocumentVersion + 1;
  EXPECT_THROW(solution_from_json(doc, sd().tileset), VersionError);
}

TEST(Io, JsonSyntaxErrorNamesOffset) {
  try {
    parse_json("{\"a\": [1, 2,, 3]}", "doc");
    FAIL() << "no error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
  }
}

TEST(Io, TileSetRoundTrip) {
  for (const TileSet& ts : {square_domino_set(), tromino_set(), load_tileset_file(data_dir() + "/tilesets/triangle.json")}) {
    const TileSet back = load_tileset(tileset_json(ts).dump());
    EXPECT_EQ(back.name, ts.name);
    ASSERT_EQ(back.type_count(), ts.type_count());
    for (std::size_t i = 0; i < ts.type_count(); ++i) {
      EXPECT_EQ(back.prototiles[i].polygon, ts.prototiles[i].polygon);
      EXPECT_EQ(back.prototiles[i].color, ts.prototiles[i].color);
    }
    EXPECT_EQ(back.symmetry.theta, ts.symmetry.theta);
    EXPECT_EQ(back.symmetry.dx, ts.symmetry.dx);
    EXPECT_EQ(back.symmetry.dy, ts.symmetry.dy);
    EXPECT_EQ(back.default_rings, ts.default_rings);
    EXPECT_EQ(back.quantum, ts.quantum);
  }
}

TEST(Io, TransformAndPolygonRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100, 100), a(0, kTwoPi);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransform t{a(rng), {u(rng), u(rng)}};
    EXPECT_EQ(transform_from_json(nlohmann::json::parse(transform_json(t).dump())), t);
    const Polygon p{{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}}};
    EXPECT_EQ(polygon_from_json(nlohmann::json::parse(polygon_json(p).dump())), p);
  }
}

TEST(Io, RegionForms) {
  const Region a = region_from_json(nlohmann::json::parse("[[0,0],[2,0],[2,2],[0,2]]"));
  EXPECT_TRUE(a.holes.empty());
  const Region b = region_from_json(
      nlohmann::json::parse(R"({"outer": [[0,0],[4,0],[4,4],[0,4]], "holes": [[[1,1],[1,2],[2,2],[2,1]]]})"));
  EXPECT_EQ(b.holes.size(), 1u);
  EXPECT_NEAR(region_area(b), 15.0, 1e-12);
  EXPECT_THROW(region_from_json(nlohmann::json::parse("{\"x\": 1}")), ParseError);
  for (const auto& f : std::filesystem::directory_iterator(data_dir() + "/shapes"))
    EXPECT_NO_THROW(load_region_file(f.path().string())) << f.path();
}

TEST(Io, GraphRoundTrip) {
  const Region r = fit_region(load_region_file(data_dir() + "/shapes/heart.json"), sd(), 0.6);
  const Crop crop = make_crop(sd(), r);
  const AdjacencyGraph back = graph_from_json(nlohmann::json::parse(graph_json(crop.graph).dump()), sd().tileset);
  ASSERT_EQ(back.size(), crop.graph.size());
  EXPECT_EQ(back.overlap_edges, crop.graph.overlap_edges);
  ASSERT_EQ(back.neighbor_edges.size(), crop.graph.neighbor_edges.size());
  for (std::size_t j = 0; j < back.neighbor_edges.size(); ++j) {
    EXPECT_EQ(back.neighbor_edges[j].a, crop.graph.neighbor_edges[j].a);
    EXPECT_EQ(back.neighbor_edges[j].b, crop.graph.neighbor_edges[j].b);
    EXPECT_EQ(back.neighbor_edges[j].pose, crop.graph.neighbor_edges[j].pose);
    EXPECT_EQ(back.neighbor_edges[j].length, crop.graph.neighbor_edges[j].length);
  }
  EXPECT_EQ(back.node_features(), crop.graph.node_features());
  EXPECT_EQ(back.edge_features(), crop.graph.edge_features());
  EXPECT_EQ(graph_json(back).dump(), graph_json(crop.graph).dump());
}

TEST(Io, SolutionRoundTrip) {
  const Region r = fit_region(load_region_file(data_dir() + "/shapes/cross.json"), sd(), 0.6);
  TileOptions o;
  o.seed = 4;
  const TileResult tr = tile_region(Policy::random(), sd(), r, o);
  const SolutionInfo info{4, "random", 0x1234};
  const nlohmann::json doc = solution_json(tr.best, tr.crop, sd().tileset, info);
  EXPECT_FALSE(doc.dump().find("wall") != std::string::npos);
  const Solution back = solution_from_json(nlohmann::json::parse(doc.dump()), sd().tileset);
  EXPECT_EQ(back.nodes, tr.best.nodes);
  ASSERT_EQ(back.selected.size(), tr.best.selected.size());
  for (std::size_t i = 0; i < back.selected.size(); ++i) {
    EXPECT_EQ(back.selected[i].prototile, tr.best.selected[i].prototile);
    EXPECT_EQ(back.selected[i].transform, tr.best.selected[i].transform);
  }
  EXPECT_EQ(back.metrics.coverage, tr.best.metrics.coverage);
  EXPECT_EQ(back.metrics.holes, tr.best.metrics.holes);
  EXPECT_EQ(back.metrics.rounds, tr.best.metrics.rounds);
  EXPECT_EQ(solution_json(back, tr.crop, sd().tileset, info).dump(), doc.dump());
}

TEST(Io, Digest) {
  EXPECT_EQ(digest(""), "cbf29ce484222325");
  EXPECT_EQ(digest("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(digest("abc").size(), 16u);
}

TEST(Svg, EmptySolutionHasOnlyUnderlays) {
  const Crop crop = make_crop(sd(), Region{rect(-1, -1, 2, 1), {}});
  const std::string svg = render_svg(Solution{}, crop, sd().tileset);
  EXPECT_EQ(count_of(svg, "<path"), 2);
  EXPECT_EQ(count_of(svg, "class=\"tile\""), 0);
  EXPECT_EQ(svg.rfind("</svg>"), svg.size() - 7);
}

TEST(Svg, TilePathsFollowUnderlays) {
  const Crop crop = make_crop(sd(), Region{rect(-1, -1, 2, 1), {}});
  Solution s;
  for (std::size_t i = 0; i < crop.graph.size(); ++i)
    if (crop.graph.nodes[i].prototile == 0) {
      s.nodes.push_back(static_cast<int>(i));
      s.selected.push_back(crop.graph.nodes[i]);
    }
  ASSERT_EQ(s.selected.size(), 2u);
  const std::string svg = render_svg(s, crop, sd().tileset);
  EXPECT_EQ(count_of(svg, "class=\"tile\""), 2);
  const auto shape = svg.find("class=\"shape\""), cand = svg.find("class=\"candidates\""), tile = svg.find("class=\"tile\"");
  EXPECT_LT(shape, cand);
  EXPECT_LT(cand, tile);
  EXPECT_EQ(svg, render_svg(s, crop, sd().tileset));
  EXPECT_NE(svg.find(sd().tileset.prototiles[0].color), std::string::npos);
}
