#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tessel/graph.hpp"
#include "tessel/nn/tensor.hpp"

namespace tessel {

struct LossWeights {
  double w_a = 1.0;
  double w_o = 10.0;
  double w_e = 0.02;
  double eps_log = 1e-7;
};

enum class LossCombine { product, sum };

// Graph structure the loss needs, detached from placements.
struct LossGraph {
  std::vector<double> areas;                  // A_i
  std::vector<std::pair<int, int>> overlaps;  // E_ovl
  std::vector<std::pair<int, int>> contacts;  // E_nbr
  std::vector<double> contact_ratio;          // L_{i,k} / L_max per contact
};

LossGraph loss_graph(const AdjacencyGraph& g);

/// 1 - w_a ln(sum A x / sum A), argument clamped to [eps, 1]. Throws EmptyGraph.
double loss_area(std::span<const double> x, std::span<const double> areas, double w_a, double eps_log = 1e-7);
/// 1 - w_o mean ln(1 - x_i x_k); 1 when there are no overlap edges.
double loss_overlap(std::span<const double> x, std::span<const std::pair<int, int>> edges, double w_o,
                    double eps_log = 1e-7);
/// 1 - w_e mean ln(x_i x_k L/L_max); 1 when there are no neighbor edges.
double loss_edges(std::span<const double> x, std::span<const std::pair<int, int>> edges,
                  std::span<const double> ratios, double w_e, double eps_log = 1e-7);
double loss_total(double la, double lo, double le, LossCombine combine = LossCombine::product);

struct LossValue {
  double area = 1.0;
  double overlap = 1.0;
  double edges = 1.0;
  double total = 1.0;
  std::vector<double> gradient;  // d total / d x
};

/// All three terms, their combination and the analytic gradient.
LossValue evaluate_loss(std::span<const double> x, const LossGraph& lg, const LossWeights& w = {},
                        LossCombine combine = LossCombine::product);

/// Differentiable total loss of the N x 1 probability tensor `x`.
template <class T>
nn::Tensor<T> loss_tensor(const nn::Tensor<T>& x, const LossGraph& lg, const LossWeights& w = {},
                          LossCombine combine = LossCombine::product) {
  const std::vector<double> xd(x.value().begin(), x.value().end());
  const LossValue v = evaluate_loss(xd, lg, w, combine);
  return nn::scalar_function(x, static_cast<T>(v.total), std::vector<T>(v.gradient.begin(), v.gradient.end()));
}

}  // namespace tessel
