#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tessel/graph.hpp"
#include "tessel/loss.hpp"
#include "tessel/nn/model.hpp"

namespace tessel {

struct TrainConfig {
  int epochs = 5;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int train_shapes = 500;
  int val_shapes = 100;
  int min_vertices = 3;
  int max_vertices = 20;
  double min_size = 0.3;
  double max_size = 0.8;
  int patience = 2;
  int checkpoint_every = 1;  // epochs; 0 disables periodic checkpoints
  std::string checkpoint_dir;  // empty: no files written
  std::string metrics_path;    // empty: no metrics log
  std::uint64_t seed = 1;
  LossWeights weights;
  LossCombine combine = LossCombine::product;
};

class Adam {
public:
  Adam(std::vector<nn::Tensor<float>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step();
  long long steps() const { return t_; }
  const std::vector<std::vector<float>>& first_moment() const { return m_; }
  const std::vector<std::vector<float>>& second_moment() const { return v_; }
  void restore(long long t, std::vector<std::vector<float>> m, std::vector<std::vector<float>> v);

private:
  std::vector<nn::Tensor<float>> params_;
  double lr_, b1_, b2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

/// Random simple polygon: star-shaped around the origin with sorted angles,
/// then rotated, scaled so its bounding box's larger side is s times the
/// smaller side of `bounds`, and placed inside `bounds`. Throws
/// GenerationFailed after 10^4 rejected attempts.
Polygon random_shape(std::mt19937_64& rng, const TrainConfig& cfg, const Box& bounds);

/// Crop of `ss` by a random shape. May be empty.
AdjacencyGraph sample_graph(std::mt19937_64& rng, const TrainConfig& cfg, const Superset& ss);

/// Loss of the current model on `g` without recording a tape.
double graph_loss(const nn::Model<float>& model, const AdjacencyGraph& g, const TrainConfig& cfg);

/// Forward, loss, backward, Adam update. Returns the pre-update loss, or
/// nothing when the graph is too small to train on (fewer than 3 nodes).
std::optional<double> train_step(nn::Model<float>& model, const AdjacencyGraph& g, Adam& opt, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean over the epoch
  double val_loss = 0.0;
};

struct TrainResult {
  nn::Model<float> best;
  double initial_val_loss = 0.0;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  std::vector<EpochRecord> epochs;
  std::size_t skipped = 0;  // graphs below the size floor
};

/// Shape sets are drawn once from separate streams; training never sees
/// the validation graphs. Early stop after `patience` epochs without
/// improvement; the best model is returned.
TrainResult train(nn::Model<float>& model, const Superset& ss, const TrainConfig& cfg,
                  const std::function<void(const std::string&)>& log = {});

}  // namespace tessel
