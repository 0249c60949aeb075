#include "tessel/loss.hpp"

#include <cmath>

#include "tessel/errors.hpp"

namespace tessel {

namespace {

struct Term {
  double value = 1.0;
  std::vector<double> grad;
};

Term area_term(std::span<const double> x, std::span<const double> areas, double w_a, double eps) {
  if (x.empty()) throw EmptyGraph("coverage loss on an empty node set");
  if (x.size() != areas.size()) throw ConfigMismatch("area count does not match node count");
  double covered = 0.0, total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    covered += areas[i] * x[i];
    total += areas[i];
  }
  const double r = covered / total;
  Term t;
  t.grad.assign(x.size(), 0.0);
  if (r <= eps) {
    t.value = 1.0 - w_a * std::log(eps);
  } else if (r >= 1.0) {
    t.value = 1.0;
  } else {
    t.value = 1.0 - w_a * std::log(r);
    for (std::size_t i = 0; i < x.size(); ++i) t.grad[i] = -w_a * areas[i] / covered;
  }
  return t;
}

Term overlap_term(std::span<const double> x, std::span<const std::pair<int, int>> edges, double w_o, double eps) {
  Term t;
  t.grad.assign(x.size(), 0.0);
  if (edges.empty()) return t;
  const double inv = 1.0 / static_cast<double>(edges.size());
  double sum = 0.0;
  for (auto [i, k] : edges) {
    const double xi = x[static_cast<std::size_t>(i)], xk = x[static_cast<std::size_t>(k)];
    const double arg = 1.0 - xi * xk;
    if (arg <= eps) {
      sum += std::log(eps);
      continue;
    }
    sum += std::log(arg);
    t.grad[static_cast<std::size_t>(i)] += w_o * inv * xk / arg;
    t.grad[static_cast<std::size_t>(k)] += w_o * inv * xi / arg;
  }
  t.value = 1.0 - w_o * inv * sum;
  return t;
}

Term edge_term(std::span<const double> x, std::span<const std::pair<int, int>> edges, std::span<const double> ratios,
               double w_e, double eps) {
  if (edges.size() != ratios.size()) throw ConfigMismatch("contact ratio count does not match edge count");
  Term t;
  t.grad.assign(x.size(), 0.0);
  if (edges.empty()) return t;
  const double inv = 1.0 / static_cast<double>(edges.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    const auto [i, k] = edges[j];
    const double xi = x[static_cast<std::size_t>(i)], xk = x[static_cast<std::size_t>(k)];
    const double arg = xi * xk * ratios[j];
    if (arg <= eps) {
      sum += std::log(eps);
      continue;
    }
    sum += std::log(arg);
    t.grad[static_cast<std::size_t>(i)] -= w_e * inv / xi;
    t.grad[static_cast<std::size_t>(k)] -= w_e * inv / xk;
  }
  t.value = 1.0 - w_e * inv * sum;
  return t;
}

}  // namespace

LossGraph loss_graph(const AdjacencyGraph& g) {
  LossGraph lg;
  lg.areas.reserve(g.size());
  for (const auto& n : g.nodes) lg.areas.push_back(n.area);
  lg.overlaps = g.overlap_edges;
  for (const auto& e : g.neighbor_edges) {
    lg.contacts.emplace_back(e.a, e.b);
    lg.contact_ratio.push_back(e.length / g.max_perimeter);
  }
  return lg;
}

double loss_area(std::span<const double> x, std::span<const double> areas, double w_a, double eps_log) {
  return area_term(x, areas, w_a, eps_log).value;
}

double loss_overlap(std::span<const double> x, std::span<const std::pair<int, int>> edges, double w_o,
                    double eps_log) {
  return overlap_term(x, edges, w_o, eps_log).value;
}

double loss_edges(std::span<const double> x, std::span<const std::pair<int, int>> edges,
                  std::span<const double> ratios, double w_e, double eps_log) {
  return edge_term(x, edges, ratios, w_e, eps_log).value;
}

double loss_total(double la, double lo, double le, LossCombine combine) {
  return combine == LossCombine::product ? la * lo * le : la + lo + le;
}

LossValue evaluate_loss(std::span<const double> x, const LossGraph& lg, const LossWeights& w, LossCombine combine) {
  const Term a = area_term(x, lg.areas, w.w_a, w.eps_log);
  const Term o = overlap_term(x, lg.overlaps, w.w_o, w.eps_log);
  const Term e = edge_term(x, lg.contacts, lg.contact_ratio, w.w_e, w.eps_log);
  LossValue v;
  v.area = a.value;
  v.overlap = o.value;
  v.edges = e.value;
  v.total = loss_total(a.value, o.value, e.value, combine);
  v.gradient.resize(x.size());
  // Product rule; the sum ablation weights every term gradient by one.
  const bool prod = combine == LossCombine::product;
  const double ca = prod ? o.value * e.value : 1.0;
  const double co = prod ? a.value * e.value : 1.0;
  const double ce = prod ? a.value * o.value : 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) v.gradient[i] = ca * a.grad[i] + co * o.grad[i] + ce * e.grad[i];
  return v;
}

}  // namespace tessel
