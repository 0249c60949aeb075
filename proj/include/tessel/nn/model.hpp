#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tessel/errors.hpp"
#include "tessel/graph.hpp"
#include "tessel/nn/tensor.hpp"

namespace tessel::nn {

struct ModelConfig {
  int layers = 6;     // L
  int channels = 32;  // C
  int type_count = 1;  // N_t
  int pose_count = 1;  // N_p
  double leaky_slope = 0.01;
  std::uint64_t seed = 1;
};

// Network inputs derived from an adjacency graph. Edge feature rows are
// deduplicated: all edges sharing a pose share one edge-weight matrix.
template <class T>
struct GraphInputs {
  Tensor<T> node_features;         // N x (N_t + 1)
  Tensor<T> unique_edge_features;  // U x (N_p + 1)
  std::vector<std::vector<IncomingEdge>> incoming;  // neighbor edges, both directions
  std::vector<std::vector<int>> overlaps;           // overlap adjacency
  std::size_t node_count = 0;
};

template <class T>
GraphInputs<T> make_inputs(const AdjacencyGraph& g) {
  GraphInputs<T> in;
  const std::size_t n = g.size();
  in.node_count = n;
  const auto nf = g.node_features();
  in.node_features = Tensor<T>(n, static_cast<std::size_t>(g.node_feature_dim()), std::vector<T>(nf.begin(), nf.end()));

  const std::size_t edim = static_cast<std::size_t>(g.edge_feature_dim());
  const auto ef = g.edge_features();
  std::map<std::vector<T>, int> rows;
  std::vector<T> unique;
  std::vector<int> row_of(g.neighbor_edges.size());
  for (std::size_t j = 0; j < g.neighbor_edges.size(); ++j) {
    std::vector<T> r(ef.begin() + static_cast<std::ptrdiff_t>(j * edim), ef.begin() + static_cast<std::ptrdiff_t>((j + 1) * edim));
    auto [it, inserted] = rows.emplace(r, static_cast<int>(rows.size()));
    if (inserted) unique.insert(unique.end(), r.begin(), r.end());
    row_of[j] = it->second;
  }
  in.unique_edge_features = Tensor<T>(rows.size(), edim, std::move(unique));

  in.incoming.assign(n, {});
  for (std::size_t j = 0; j < g.neighbor_edges.size(); ++j) {
    const auto& e = g.neighbor_edges[j];
    in.incoming[static_cast<std::size_t>(e.a)].push_back({e.b, row_of[j]});
    in.incoming[static_cast<std::size_t>(e.b)].push_back({e.a, row_of[j]});
  }
  in.overlaps.assign(n, {});
  for (auto [i, k] : g.overlap_edges) {
    in.overlaps[static_cast<std::size_t>(i)].push_back(k);
    in.overlaps[static_cast<std::size_t>(k)].push_back(i);
  }
  return in;
}

template <class T>
struct Linear {
  Tensor<T> weight;  // in x out
  Tensor<T> bias;    // 1 x out

  Tensor<T> operator()(const Tensor<T>& x) const { return add_bias(matmul(x, weight), bias); }
};

// Two affine layers with a leaky ReLU in between.
template <class T>
struct Mlp {
  Linear<T> first;
  Linear<T> second;

  Tensor<T> operator()(const Tensor<T>& x, T slope) const { return second(leaky_relu(first(x), slope)); }
};

template <class T>
struct AggregationLayer {
  Tensor<T> weight;  // W^l, C x C
  Mlp<T> edge_net;   // Phi^l: (N_p + 1) -> C -> C*C
  Mlp<T> overlap_net;  // Theta^l: C -> C -> C
  Tensor<T> epsilon;   // 1 x 1, starts at zero
};

template <class T>
class Model {
public:
  Model() = default;

  explicit Model(const ModelConfig& cfg) : config_(cfg) {
    if (cfg.layers < 1 || cfg.channels < 1 || cfg.type_count < 1 || cfg.pose_count < 0)
      throw ConfigMismatch("invalid model configuration");
    std::mt19937_64 rng(cfg.seed);
    const auto c = static_cast<std::size_t>(cfg.channels);
    const auto nt = static_cast<std::size_t>(cfg.type_count + 1);
    const auto np = static_cast<std::size_t>(cfg.pose_count + 1);
    embed_ = make_mlp(rng, nt, c, c);
    for (int l = 0; l < cfg.layers; ++l) {
      AggregationLayer<T> layer;
      // Residual branches start small so every layer begins near the identity.
      layer.weight = uniform(rng, c, c, c, kBranchGain);
      // The generated C x C kernel multiplies C input channels, so its entries
      // get that fan-in on top of the hidden layer's.
      layer.edge_net = make_mlp(rng, np, c, c * c, c, kBranchGain);
      layer.overlap_net = make_mlp(rng, c, c, c, 1, kBranchGain);
      layer.epsilon = Tensor<T>::parameter(1, 1, T(0));
      layers_.push_back(std::move(layer));
    }
    head_ = make_mlp(rng, c * static_cast<std::size_t>(cfg.layers + 1), c, 1);
  }

  const ModelConfig& config() const { return config_; }

  /// Every learnable tensor, in declaration order (embed, layers, head).
  std::vector<Tensor<T>> parameters() const {
    std::vector<Tensor<T>> p;
    auto mlp = [&p](const Mlp<T>& m) {
      p.push_back(m.first.weight);
      p.push_back(m.first.bias);
      p.push_back(m.second.weight);
      p.push_back(m.second.bias);
    };
    mlp(embed_);
    for (const auto& l : layers_) {
      p.push_back(l.weight);
      mlp(l.edge_net);
      mlp(l.overlap_net);
      p.push_back(l.epsilon);
    }
    mlp(head_);
    return p;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : parameters()) n += t.size();
    return n;
  }

  void zero_grad() const {
    for (auto t : parameters()) t.zero_grad();
  }

  void check_inputs(const GraphInputs<T>& in) const {
    if (in.node_count == 0) throw EmptyGraph("forward on an empty graph");
    if (in.node_features.cols() != static_cast<std::size_t>(config_.type_count + 1))
      throw ConfigMismatch("node feature width " + std::to_string(in.node_features.cols()) + " vs model N_t+1 = " +
                           std::to_string(config_.type_count + 1));
    if (in.unique_edge_features.rows() > 0 &&
        in.unique_edge_features.cols() != static_cast<std::size_t>(config_.pose_count + 1))
      throw ConfigMismatch("edge feature width " + std::to_string(in.unique_edge_features.cols()) +
                           " vs model N_p+1 = " + std::to_string(config_.pose_count + 1));
  }

  /// Selection probability per node, N x 1, each strictly inside (0, 1).
  Tensor<T> forward(const GraphInputs<T>& in) const {
    check_inputs(in);
    const T slope = static_cast<T>(config_.leaky_slope);
    Tensor<T> f = embed_(in.node_features, slope);
    Tensor<T> g = f;
    std::vector<Tensor<T>> features{f};
    for (const auto& layer : layers_) {
      // Neighbor aggregation: edge-conditioned convolution plus residual.
      const Tensor<T> phi = layer.edge_net(in.unique_edge_features, slope);
      const Tensor<T> agg = edge_conditioned_sum(f, phi, in.incoming);
      const Tensor<T> h = add(leaky_relu(add(matmul(f, layer.weight), agg), slope), f);
      // Overlap aggregation: GIN-style update plus residual.
      const Tensor<T> mixed = add(scale_by(g, layer.epsilon, T(1)), neighbor_sum(g, in.overlaps));
      g = add(leaky_relu(layer.overlap_net(mixed, slope), slope), g);
      f = mul(h, g);
      features.push_back(f);
    }
    return sigmoid(head_(concat_cols(features), slope));
  }

  /// Copy of this model in another scalar type (same parameter values).
  template <class U>
  Model<U> cast() const {
    Model<U> m;
    m.config_ = config_;
    auto conv = [](const Tensor<T>& t) {
      auto out = Tensor<U>::parameter(t.rows(), t.cols());
      for (std::size_t i = 0; i < t.size(); ++i) out.value()[i] = static_cast<U>(t.value()[i]);
      out.set_requires_grad(t.requires_grad());
      return out;
    };
    auto conv_mlp = [&](const Mlp<T>& x) {
      return Mlp<U>{{conv(x.first.weight), conv(x.first.bias)}, {conv(x.second.weight), conv(x.second.bias)}};
    };
    m.embed_ = conv_mlp(embed_);
    for (const auto& l : layers_)
      m.layers_.push_back({conv(l.weight), conv_mlp(l.edge_net), conv_mlp(l.overlap_net), conv(l.epsilon)});
    m.head_ = conv_mlp(head_);
    return m;
  }

  /// Deep copy; the clone shares no parameter storage with this model.
  Model clone() const { return cast<T>(); }

private:
  template <class U>
  friend class Model;

  static constexpr double kBranchGain = 0.5;

  static Tensor<T> uniform(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::size_t fan_in,
                           double gain = 1.0) {
    const double bound = gain / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto t = Tensor<T>::parameter(rows, cols);
    for (auto& v : t.value()) v = static_cast<T>(dist(rng));
    return t;
  }

  static Mlp<T> make_mlp(std::mt19937_64& rng, std::size_t in, std::size_t hidden, std::size_t out,
                         std::size_t out_fan = 1, double out_gain = 1.0) {
    Mlp<T> m;
    m.first.weight = uniform(rng, in, hidden, in);
    m.first.bias = uniform(rng, 1, hidden, in);
    m.second.weight = uniform(rng, hidden, out, hidden * out_fan, out_gain);
    m.second.bias = uniform(rng, 1, out, hidden * out_fan, out_gain);
    return m;
  }

  ModelConfig config_;
  Mlp<T> embed_;
  std::vector<AggregationLayer<T>> layers_;
  Mlp<T> head_;
};

}  // namespace tessel::nn
