#include "tessel/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "tessel/errors.hpp"
#include "tessel/io.hpp"

namespace tessel {

Adam::Adam(std::vector<nn::Tensor<float>> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0f);
    v_.emplace_back(p.size(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t j = 0; j < params_.size(); ++j) {
    auto& p = params_[j];
    if (!p.requires_grad() || p.grad().size() != p.size()) continue;
    auto& m = m_[j];
    auto& v = v_[j];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad()[i];
      m[i] = static_cast<float>(b1_ * m[i] + (1.0 - b1_) * g);
      v[i] = static_cast<float>(b2_ * v[i] + (1.0 - b2_) * g * g);
      const double upd = lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      if (upd != 0.0) p.value()[i] = static_cast<float>(p.value()[i] - upd);
    }
  }
}

void Adam::restore(long long t, std::vector<std::vector<float>> m, std::vector<std::vector<float>> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw WeightFormatError("optimizer state does not match model");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

Polygon random_shape(std::mt19937_64& rng, const TrainConfig& cfg, const Box& bounds) {
  std::uniform_int_distribution<int> count(cfg.min_vertices, cfg.max_vertices);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // The vertex count is drawn once so rejections do not skew its histogram.
  const int n = count(rng);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> angles(static_cast<std::size_t>(n));
    for (double& a : angles) a = unit(rng) * kTwoPi;
    std::sort(angles.begin(), angles.end());
    const double spin = unit(rng) * kTwoPi;
    Polygon p;
    for (double a : angles) {
      const double r = 0.2 + 0.8 * unit(rng);
      p.vertices.push_back({r * std::cos(a + spin), r * std::sin(a + spin)});
    }
    const double s = cfg.min_size + (cfg.max_size - cfg.min_size) * unit(rng);
    const double fx = unit(rng), fy = unit(rng);
    const Box b = bounding_box(p);
    const double extent = std::max(b.width(), b.height());
    if (extent <= 0.0) continue;
    const double scale = s * std::min(bounds.width(), bounds.height()) / extent;
    const Vec2 room{bounds.width() - scale * b.width(), bounds.height() - scale * b.height()};
    const Vec2 origin{bounds.lo.x + fx * room.x, bounds.lo.y + fy * room.y};
    for (Vec2& v : p.vertices) v = origin + scale * (v - b.lo);
    if (signed_area(p.vertices) < 0.0) p = reversed(p);
    try {
      validate_polygon(p, Tolerances::for_quantum(1e-3 * std::min(bounds.width(), bounds.height())));
      return p;
    } catch (const error&) {
    }
  }
  throw GenerationFailed("no simple polygon after 10000 attempts");
}

AdjacencyGraph sample_graph(std::mt19937_64& rng, const TrainConfig& cfg, const Superset& ss) {
  Region r{random_shape(rng, cfg, ss.bounds()), {}};
  return build_graph(crop_superset(ss, r), ss);
}

double graph_loss(const nn::Model<float>& model, const AdjacencyGraph& g, const TrainConfig& cfg) {
  nn::NoGradGuard guard;
  const auto x = model.forward(nn::make_inputs<float>(g));
  const std::vector<double> xd(x.value().begin(), x.value().end());
  return evaluate_loss(xd, loss_graph(g), cfg.weights, cfg.combine).total;
}

std::optional<double> train_step(nn::Model<float>& model, const AdjacencyGraph& g, Adam& opt,
                                 const TrainConfig& cfg) {
  if (g.size() < 3) return std::nullopt;
  model.zero_grad();
  const auto x = model.forward(nn::make_inputs<float>(g));
  const auto loss = loss_tensor(x, loss_graph(g), cfg.weights, cfg.combine);
  nn::backward(loss);
  const double value = loss.value()[0];
  opt.step();
  return value;
}

namespace {

double mean_loss(const nn::Model<float>& model, const std::vector<AdjacencyGraph>& graphs, const TrainConfig& cfg) {
  double s = 0.0;
  for (const auto& g : graphs) s += graph_loss(model, g, cfg);
  return graphs.empty() ? 0.0 : s / static_cast<double>(graphs.size());
}

std::vector<AdjacencyGraph> draw_graphs(std::uint64_t seed, int count, const TrainConfig& cfg, const Superset& ss,
                                        std::size_t& skipped) {
  std::mt19937_64 rng(seed);
  std::vector<AdjacencyGraph> out;
  for (int i = 0; i < count; ++i) {
    AdjacencyGraph g = sample_graph(rng, cfg, ss);
    if (g.size() < 3) {
      ++skipped;
      continue;
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

TrainResult train(nn::Model<float>& model, const Superset& ss, const TrainConfig& cfg,
                  const std::function<void(const std::string&)>& log) {
  using clock = std::chrono::steady_clock;
  TrainResult res;
  const auto train_set = draw_graphs(cfg.seed * 2 + 1, cfg.train_shapes, cfg, ss, res.skipped);
  const auto val_set = draw_graphs(cfg.seed * 2 + 2, cfg.val_shapes, cfg, ss, res.skipped);
  if (log) log("train graphs: " + std::to_string(train_set.size()) + ", val graphs: " + std::to_string(val_set.size()) +
               ", skipped: " + std::to_string(res.skipped));

  std::ofstream metrics;
  if (!cfg.metrics_path.empty()) {
    metrics.open(cfg.metrics_path);
    if (!metrics) throw ParseError("cannot write metrics log '" + cfg.metrics_path + "'");
  }
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  Adam opt(model.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  res.initial_val_loss = mean_loss(model, val_set, cfg);
  res.best_val_loss = res.initial_val_loss;
  res.best = model.clone();
  if (log) log("initial val loss: " + std::to_string(res.initial_val_loss));

  // Per-epoch visiting order is a seeded shuffle.
  std::mt19937_64 order_rng(cfg.seed * 2 + 3);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  long long iter = 0;
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t n = 0; n < order.size(); ++n) {
      const auto start = clock::now();
      const auto& g = train_set[order[n]];
      const auto loss = train_step(model, g, opt, cfg);
      if (!loss) continue;
      sum += *loss;
      ++steps;
      ++iter;
      const bool epoch_end = n + 1 == order.size();
      std::optional<double> val;
      if (epoch_end) val = mean_loss(model, val_set, cfg);
      if (metrics.is_open()) {
        nlohmann::json rec{{"iter", iter},
                           {"train_loss", *loss},
                           {"val_loss", val ? nlohmann::json(*val) : nlohmann::json(nullptr)},
                           {"graph_size", g.size()},
                           {"wall_ms", std::chrono::duration<double, std::milli>(clock::now() - start).count()}};
        metrics << rec.dump() << '\n';
      }
      if (epoch_end) {
        EpochRecord rec{epoch, steps ? sum / static_cast<double>(steps) : 0.0, *val};
        res.epochs.push_back(rec);
        if (log) log("epoch " + std::to_string(epoch) + ": train " + std::to_string(rec.train_loss) + ", val " +
                     std::to_string(rec.val_loss));
      }
    }
    if (res.epochs.empty() || res.epochs.back().epoch != epoch) {
      const double val = mean_loss(model, val_set, cfg);
      res.epochs.push_back({epoch, steps ? sum / static_cast<double>(steps) : 0.0, val});
    }
    const double val = res.epochs.back().val_loss;
    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0)
      save_checkpoint(cfg.checkpoint_dir + "/epoch" + std::to_string(epoch) + ".tgnn", model, opt);
    if (val < res.best_val_loss) {
      res.best_val_loss = val;
      res.best_epoch = epoch;
      res.best = model.clone();
      stale = 0;
      if (!cfg.checkpoint_dir.empty()) save_weights(cfg.checkpoint_dir + "/best.tgnn", res.best);
    } else if (++stale > cfg.patience) {
      if (log) log("early stop after epoch " + std::to_string(epoch));
      break;
    }
  }
  return res;
}

}  // namespace tessel
