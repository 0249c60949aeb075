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

enum class PolicyKind { gnn, random, greedy, fixed };

struct Policy {
  PolicyKind kind = PolicyKind::random;
  const nn::Model<float>* model = nullptr;  // shared read-only, gnn only
  // fixed only: probability per node of the crop graph, held by the caller
  const std::vector<double>* probabilities = nullptr;

  static Policy gnn(const nn::Model<float>& m) { return {PolicyKind::gnn, &m}; }
  static Policy random() { return {PolicyKind::random, nullptr}; }
  static Policy greedy() { return {PolicyKind::greedy, nullptr}; }
  static Policy fixed(const std::vector<double>& x) { return {PolicyKind::fixed, nullptr, &x}; }
  std::string name() const;
};

/// "gnn", "random" or "greedy"; throws ConfigMismatch otherwise.
PolicyKind parse_policy(const std::string& name);

// Candidate placements inside one pose of the target region.
struct Crop {
  int index = 0;  // sample index among the 54 poses
  RigidTransform pose;
  Region region;  // target region after posing
  AdjacencyGraph graph;
  double total_area = 0.0;  // sum of normalized candidate areas
};

struct Metrics {
  double coverage = 0.0;
  int holes = 0;
  double contact_length = 0.0;
  double loss = 0.0;
  int rounds = 0;
  bool round_limit = false;
  double wall_ms = 0.0;
};

struct Solution {
  std::vector<int> nodes;  // selected node indices in the crop graph, ascending
  std::vector<Placement> selected;
  Metrics metrics;
  int crop_index = 0;
  int run_index = 0;
};

struct SolveOptions {
  int round_cap = 50;
  // Accept every scanned candidate up to the first overlap instead of
  // drawing against e^(p-1).
  bool deterministic_accept = false;
  LossWeights weights;
};

/// Moves and scales `shape` so its bounding box is centered on the superset
/// and its larger side equals `size` times the superset's smaller side.
Region fit_region(const Region& shape, const Superset& ss, double size);

/// Step one: 6 rotations in [0, theta) x 9 translations in [0, dx) x [0, dy);
/// the first sample of each is zero. Returns the K crops with the largest
/// total tile area, in nonincreasing order. Throws NoCandidates.
std::vector<Crop> find_crops(const Superset& ss, const Region& r, int K, std::mt19937_64& rng);

/// Crop for a fixed pose, skipping the search.
Crop make_crop(const Superset& ss, const Region& r, const RigidTransform& pose = {});

using RoundCallback = std::function<void(int round, std::size_t remaining)>;

/// Step two. Greedy policies run their own one-pick-per-step loop.
Solution run_algorithm1(const Policy& policy, const Crop& crop, std::mt19937_64& rng, const SolveOptions& opt = {},
                        const RoundCallback& on_round = {});

/// Policy probabilities on the current graph. The greedy variant scores
/// shared boundary with the partial solution (nodes in `selected`, indices
/// of `g`) plus the region boundary.
std::vector<double> policy_probabilities(const Policy& policy, const AdjacencyGraph& g, std::mt19937_64& rng);
std::vector<double> greedy_policy(const AdjacencyGraph& g, const std::vector<int>& selected, const Region& region);

struct TileProgress {
  int jobs_done = 0;
  int jobs_total = 0;
  int crop = 0;
  int round = 0;
  int rounds_total = 0;  // rounds finished across all jobs
  double best_coverage = 0.0;
};

struct TileOptions {
  int K = 1;
  int runs = 1;
  std::uint64_t seed = 1;
  int jobs = 1;  // worker threads
  SolveOptions solve;
  // Skip step one and use this pose only.
  std::optional<RigidTransform> fixed_pose;
  std::function<void(const TileProgress&)> progress;  // called under a lock
};

struct TileResult {
  Solution best;
  Crop crop;  // the crop the best solution came from
  std::vector<double> run_coverage;  // per job, in job order
};

/// K crops x runs, each job with a private generator seeded from
/// (seed, crop, run). Best by coverage, then contact length, then job order.
TileResult tile_region(const Policy& policy, const Superset& ss, const Region& r, const TileOptions& opt);

std::uint64_t job_seed(std::uint64_t master, int crop, int run);

/// Area of the union of all candidates in the crop graph.
double candidate_union_area(const AdjacencyGraph& g);

/// Coverage, holes, contact length and loss of `sol` over its crop.
Metrics evaluate_solution(const Solution& sol, const Crop& crop, const LossWeights& w = {});

/// sum A_i + lambda * sum over selected contacts of L / L_max.
double selection_objective(const AdjacencyGraph& g, const std::vector<int>& nodes, double lambda);
/// True when no overlap edge has both ends in `nodes`.
bool is_independent(const AdjacencyGraph& g, const std::vector<int>& nodes);

struct ExactOptions {
  double lambda = 0.02;
  int cap = 40;
  std::optional<std::size_t> node_budget;  // explored B&B nodes; lifts the cap
};

struct ExactResult {
  std::vector<int> nodes;
  double objective = 0.0;
  double bound = 0.0;  // equals objective when optimal
  bool optimal = false;
  std::size_t explored = 0;
};

/// Best-bound branch and bound over binary selections. Throws
/// CapacityExceeded when N exceeds the cap and no budget is given.
ExactResult exact_solve(const AdjacencyGraph& g, const ExactOptions& opt = {});

}  // namespace tessel
