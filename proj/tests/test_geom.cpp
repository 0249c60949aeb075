#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "tessel/errors.hpp"

using namespace tessel;
using namespace testing_support;

TEST(Geom, PolygonArea) {
  EXPECT_DOUBLE_EQ(polygon_area(unit_square()), 1.0);
  EXPECT_DOUBLE_EQ(polygon_area(Polygon{{{0, 0}, {1, 0}, {0, 1}}}), 0.5);
  EXPECT_THROW(polygon_area(Polygon{{{0, 0}, {1, 0}, {2, 0}}}), DegeneratePolygon);
}

TEST(Geom, ApplyTransform) {
  EXPECT_EQ(apply_transform(unit_square(), {}), unit_square());
  const Polygon r = apply_transform(unit_square(), {kTwoPi / 4, {0, 0}});
  const std::vector<Vec2> expect{{0, 0}, {0, 1}, {-1, 1}, {-1, 0}};
  ASSERT_EQ(r.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(r[i].x, expect[i].x, 1e-15);
    EXPECT_NEAR(r[i].y, expect[i].y, 1e-15);
  }
}

TEST(Geom, AreaPreservedUnderRandomTransforms) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0, kTwoPi), off(-50, 50), rad(0.2, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    // star-shaped polygon around the origin
    const int n = 3 + trial % 10;
    std::vector<double> a(n);
    for (auto& v : a) v = ang(rng);
    std::sort(a.begin(), a.end());
    Polygon p;
    for (double t : a) {
      const double r = rad(rng);
      p.vertices.push_back({r * std::cos(t), r * std::sin(t)});
    }
    const double before = std::abs(signed_area(p.vertices));
    if (before < 1e-6) continue;
    const Polygon q = apply_transform(p, {ang(rng), {off(rng), off(rng)}});
    EXPECT_NEAR(std::abs(signed_area(q.vertices)), before, 1e-9 * before);
  }
}

TEST(Geom, OverlapAreaExamples) {
  EXPECT_NEAR(overlap_area(unit_square(), unit_square()), 1.0, 1e-12);
  EXPECT_NEAR(overlap_area(unit_square(), unit_square(1, 0)), 0.0, 1e-12);
  EXPECT_NEAR(overlap_area(unit_square(), unit_square(0.5, 0)), 0.5, 1e-12);
}

TEST(Geom, OverlapAreaMatchesMonteCarlo) {
  const double mc = mc_overlap(unit_square(), unit_square(0.5, 0), 1000000, 5);
  EXPECT_NEAR(overlap_area(unit_square(), unit_square(0.5, 0)), mc, 1e-3 * 2);
  // Non-convex L against a rotated square.
  const Polygon ell{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}};
  const Polygon sq = apply_transform(rect(-0.5, -0.5, 1.2, 1.2), {0.4, {1.3, 1.1}});
  const double mc2 = mc_overlap(ell, sq, 1000000, 6);
  EXPECT_NEAR(overlap_area(ell, sq), mc2, 5e-3);
}

TEST(Geom, OverlapSymmetricAndBounded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1), ang(0, kTwoPi);
  const Polygon ell{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}};
  for (int i = 0; i < 500; ++i) {
    const Polygon a = apply_transform(ell, {ang(rng), {u(rng), u(rng)}});
    const Polygon b = apply_transform(rect(0, 0, 1, 0.7), {ang(rng), {u(rng), u(rng)}});
    const double ab = overlap_area(a, b), ba = overlap_area(b, a);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_LE(ab, std::min(polygon_area(a), polygon_area(b)) + 1e-12);
    EXPECT_GE(ab, 0.0);
  }
}

TEST(Geom, SharedBoundaryLength) {
  EXPECT_NEAR(shared_boundary_length(unit_square(), unit_square(1, 0)), 1.0, 1e-12);
  EXPECT_NEAR(shared_boundary_length(unit_square(), unit_square(1, 0.5)), 0.5, 1e-12);
  EXPECT_EQ(shared_boundary_length(unit_square(), unit_square(1, 1)), 0.0);
  EXPECT_NEAR(shared_boundary_length(unit_square(1, 0.5), unit_square()), 0.5, 1e-12);
  // Point contact of rotated tiles.
  const Polygon diamond = apply_transform(unit_square(), {kTwoPi / 8, {1, 0.5}});
  EXPECT_EQ(shared_boundary_length(unit_square(), diamond), 0.0);
}

TEST(Geom, RegionContains) {
  const Region big{rect(0, 0, 3, 3), {}};
  EXPECT_TRUE(region_contains(big, unit_square(1, 1), 1e-6));
  EXPECT_FALSE(region_contains(big, unit_square(2.5, 1), 1e-6));
  EXPECT_TRUE(region_contains(big, unit_square(0, 1), 1e-6));
  Region holed{rect(0, 0, 3, 3), {reversed(unit_square(1, 1))}};
  EXPECT_FALSE(region_contains(holed, rect(0.5, 0.5, 1, 1), 1e-6));
  EXPECT_TRUE(region_contains(holed, unit_square(0, 0), 1e-6));
  EXPECT_TRUE(region_contains(holed, unit_square(2, 1), 1e-6));
  // A notch whose tip enters the tile by 0.002 removes almost no area.
  const Region notched{{{{0, 0}, {3, 0}, {3, 3}, {1.5, 3}, {1.5, 1.998}, {1.4999, 3}, {0, 3}}}, {}};
  EXPECT_FALSE(region_contains(notched, rect(1, 1, 1, 1), 1e-6));
  EXPECT_TRUE(region_contains(notched, rect(0, 0, 1, 1), 1e-6));
}

TEST(Geom, CanonicalKeyExamples) {
  const double tau = 1e-4;
  Polygon s = unit_square();
  Polygon rotated_start{{s[2], s[3], s[0], s[1]}};
  EXPECT_EQ(canonical_key(s, tau), canonical_key(rotated_start, tau));
  EXPECT_EQ(canonical_key(s, tau), canonical_key(unit_square(tau / 10, 0), tau));
  EXPECT_NE(canonical_key(s, tau), canonical_key(unit_square(10 * tau, 0), tau));
}

TEST(Geom, CanonicalKeyStableUnderSmallPerturbation) {
  // Squares on a lattice, jittered well below tau/2 and listed from random
  // start vertices, must keep their key.
  const double tau = 1e-4;
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> cell(-1000, 1000), start(0, 3);
  std::uniform_real_distribution<double> jitter(-tau / 8, tau / 8);
  for (int i = 0; i < 10000; ++i) {
    const Polygon base = unit_square(cell(rng) * 0.5, cell(rng) * 0.25);
    Polygon moved;
    const int s0 = start(rng);
    for (int k = 0; k < 4; ++k) {
      const Vec2 v = base[static_cast<std::size_t>((s0 + k) % 4)];
      moved.vertices.push_back({v.x + jitter(rng), v.y + jitter(rng)});
    }
    ASSERT_EQ(canonical_key(base, tau), canonical_key(moved, tau)) << i;
  }
}

TEST(Geom, ValidatePolygon) {
  EXPECT_NO_THROW(validate_polygon(unit_square()));
  EXPECT_THROW(validate_polygon(Polygon{{{0, 0}, {3, 0}, {0, 1}, {1, 2}}}), InvalidPolygon);
  EXPECT_THROW(validate_polygon(Polygon{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}}), error);
  EXPECT_THROW(validate_polygon(reversed(unit_square())), InvalidPolygon);
}

TEST(Geom, TriangulationCoversArea) {
  const Polygon ell{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}};
  double sum = 0;
  for (const auto& t : triangulate(ell)) sum += std::abs(signed_area(t));
  EXPECT_NEAR(sum, 3.0, 1e-12);
}
