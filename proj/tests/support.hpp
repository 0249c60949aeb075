#pragma once

// Fixtures and independent oracles shared by the test suites. Oracles here
// deliberately avoid the library routines they check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tessel/geom.hpp"
#include "tessel/graph.hpp"
#include "tessel/tileset.hpp"

namespace testing_support {

using namespace tessel;

inline Polygon rect(double x, double y, double w, double h) { return {{{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}}; }
inline Polygon unit_square(double x = 0, double y = 0) { return rect(x, y, 1, 1); }

inline TileSet square_set() { return make_tileset("square", {{unit_square(), "#ff0000"}}, {kTwoPi / 4, 1, 1}, 4); }
inline TileSet domino_set() { return make_tileset("domino", {{rect(0, 0, 2, 1), "#00ff00"}}, {kTwoPi / 4, 1, 1}, 4); }
inline TileSet square_domino_set() {
  return make_tileset("square_domino", {{unit_square(), "#ff0000"}, {rect(0, 0, 2, 1), "#00ff00"}}, {kTwoPi / 4, 1, 1},
                      4);
}
inline TileSet tromino_set() {
  return make_tileset("tromino",
                      {{rect(0, 0, 3, 1), "#e05d5d"}, {{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}}, "#5d8ae0"}},
                      {kTwoPi / 4, 1, 1}, 3);
}

inline std::string data_dir() { return TESSEL_DATA_DIR; }

// Even-odd crossing test written independently of geom.
inline bool inside_oracle(Vec2 q, const Polygon& p) {
  bool in = false;
  const std::size_t n = p.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p.vertices[i], b = p.vertices[(i + 1) % n];
    if ((a.y <= q.y && b.y > q.y) || (b.y <= q.y && a.y > q.y)) {
      const double t = (q.y - a.y) / (b.y - a.y);
      if (q.x < a.x + t * (b.x - a.x)) in = !in;
    }
  }
  return in;
}

// Monte-Carlo estimate of the intersection area.
inline double mc_overlap(const Polygon& a, const Polygon& b, int samples, std::uint64_t seed) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (Vec2 v : a.vertices) {
    x0 = std::min(x0, v.x);
    y0 = std::min(y0, v.y);
    x1 = std::max(x1, v.x);
    y1 = std::max(y1, v.y);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  int hits = 0;
  for (int i = 0; i < samples; ++i) {
    const Vec2 q{ux(rng), uy(rng)};
    if (inside_oracle(q, a) && inside_oracle(q, b)) ++hits;
  }
  return (x1 - x0) * (y1 - y0) * hits / samples;
}

// Number of integer points with |x| + |y| <= r.
inline long l1_ball_count(int r) {
  long n = 0;
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y)
      if (std::abs(x) + std::abs(y) <= r) ++n;
  return n;
}


// Synthetic graph with random features and edges; geometry is not meaningful.
inline AdjacencyGraph random_graph(std::mt19937_64& rng, int n, int types, int poses, double p_ovl = 0.15,
                                   double p_nbr = 0.2) {
  static const TileSet ts = square_domino_set();
  AdjacencyGraph g;
  g.type_count = types;
  g.pose_count = poses;
  g.max_perimeter = 6.0;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Placement p = make_placement(ts, 0, {0, {double(i), 0}});
    p.prototile = static_cast<int>(rng() % static_cast<std::uint64_t>(types));
    p.area = 0.05 + 0.95 * u01(rng);
    g.nodes.push_back(std::move(p));
  }
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) {
      const double r = u01(rng);
      if (r < p_ovl)
        g.overlap_edges.push_back({i, k});
      else if (r < p_ovl + p_nbr)
        g.neighbor_edges.push_back({i, k, 0.5 + 5.5 * u01(rng), static_cast<int>(rng() % static_cast<std::uint64_t>(poses))});
    }
  return g;
}

// Best objective over every independent subset (N <= 24).
inline double exhaustive_best(const AdjacencyGraph& g, double lambda, std::vector<int>* best_nodes = nullptr) {
  const std::size_t n = g.size();
  std::vector<std::uint32_t> conflict(n, 0);
  for (auto [i, k] : g.overlap_edges) {
    conflict[static_cast<std::size_t>(i)] |= 1u << k;
    conflict[static_cast<std::size_t>(k)] |= 1u << i;
  }
  double best = -1.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      if ((mask >> i & 1u) && (conflict[i] & mask)) ok = false;
    if (!ok) continue;
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) v += g.nodes[i].area;
    for (const auto& e : g.neighbor_edges)
      if ((mask >> e.a & 1u) && (mask >> e.b & 1u)) v += lambda * e.length / g.max_perimeter;
    if (v > best) {
      best = v;
      if (best_nodes) {
        best_nodes->clear();
        for (std::size_t i = 0; i < n; ++i)
          if (mask >> i & 1u) best_nodes->push_back(static_cast<int>(i));
      }
    }
  }
  return best;
}

// Regularized upper incomplete gamma Q(a, x) via series / continued fraction.
inline double gamma_q(double a, double x) {
  if (x <= 0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1) {
    double sum = 1.0 / a, del = sum, ap = a;
    for (int n = 0; n < 1000; ++n) {
      ap += 1;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1 - a, c = 1e300, d = 1 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2), ties dropped.
inline double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  return p;
}

}  // namespace testing_support
