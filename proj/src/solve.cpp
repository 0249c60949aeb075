#include "tessel/solve.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <queue>
#include <thread>

#include "tessel/boolean.hpp"
#include "tessel/errors.hpp"

namespace tessel {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

std::vector<std::vector<int>> overlap_lists(const AdjacencyGraph& g) {
  std::vector<std::vector<int>> adj(g.size());
  for (auto [i, k] : g.overlap_edges) {
    adj[static_cast<std::size_t>(i)].push_back(k);
    adj[static_cast<std::size_t>(k)].push_back(i);
  }
  return adj;
}

double contact_length(const AdjacencyGraph& g, const std::vector<int>& nodes) {
  std::vector<char> sel(g.size(), 0);
  for (int i : nodes) sel[static_cast<std::size_t>(i)] = 1;
  double s = 0.0;
  for (const auto& e : g.neighbor_edges)
    if (sel[static_cast<std::size_t>(e.a)] && sel[static_cast<std::size_t>(e.b)]) s += e.length;
  return s;
}

double selected_area(const AdjacencyGraph& g, const std::vector<int>& nodes) {
  double s = 0.0;
  for (int i : nodes) s += g.nodes[static_cast<std::size_t>(i)].shape.area;
  return s;
}

double boundary_contact(const Placement& p, const Region& r, double eps) {
  double c = shared_boundary_length(p.polygon(), r.outer, eps);
  for (const auto& h : r.holes) c += shared_boundary_length(p.polygon(), h, eps);
  return c;
}

void check_model(const nn::Model<float>& m, const AdjacencyGraph& g) {
  const auto& c = m.config();
  if (c.type_count != g.type_count || c.pose_count != g.pose_count)
    throw ConfigMismatch("model expects N_t=" + std::to_string(c.type_count) + ", N_p=" + std::to_string(c.pose_count) +
                         " but the graph has N_t=" + std::to_string(g.type_count) +
                         ", N_p=" + std::to_string(g.pose_count));
}

Solution finish(const Crop& crop, std::vector<int> nodes, int rounds, bool limit) {
  Solution s;
  std::sort(nodes.begin(), nodes.end());
  s.nodes = std::move(nodes);
  for (int i : s.nodes) s.selected.push_back(crop.graph.nodes[static_cast<std::size_t>(i)]);
  s.metrics.rounds = rounds;
  s.metrics.round_limit = limit;
  s.metrics.contact_length = contact_length(crop.graph, s.nodes);
  return s;
}

Solution run_greedy(const Crop& crop) {
  const AdjacencyGraph& g = crop.graph;
  const double eps = g.nodes.empty() ? 1e-6 : 1e-6 * g.max_perimeter;
  std::vector<double> score(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) score[i] = boundary_contact(g.nodes[i], crop.region, eps);
  std::vector<std::vector<std::pair<int, double>>> nbr(g.size());
  for (const auto& e : g.neighbor_edges) {
    nbr[static_cast<std::size_t>(e.a)].emplace_back(e.b, e.length);
    nbr[static_cast<std::size_t>(e.b)].emplace_back(e.a, e.length);
  }
  const auto ovl = overlap_lists(g);
  std::vector<char> open(g.size(), 1);
  std::vector<int> picked;
  int steps = 0;
  for (;;) {
    int best = -1;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (open[i] && (best < 0 || score[i] > score[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
    if (best < 0) break;
    ++steps;
    picked.push_back(best);
    open[static_cast<std::size_t>(best)] = 0;
    for (int k : ovl[static_cast<std::size_t>(best)]) open[static_cast<std::size_t>(k)] = 0;
    for (auto [k, len] : nbr[static_cast<std::size_t>(best)]) score[static_cast<std::size_t>(k)] += len;
  }
  return finish(crop, std::move(picked), steps, false);
}

}  // namespace

std::string Policy::name() const {
  switch (kind) {
    case PolicyKind::gnn: return "gnn";
    case PolicyKind::random: return "random";
    case PolicyKind::greedy: return "greedy";
    case PolicyKind::fixed: return "fixed";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "gnn") return PolicyKind::gnn;
  if (name == "random") return PolicyKind::random;
  if (name == "greedy") return PolicyKind::greedy;
  throw ConfigMismatch("unknown policy '" + name + "'");
}

Region fit_region(const Region& shape, const Superset& ss, double size) {
  const Box sb = ss.bounds();
  const Box rb = bounding_box(shape.outer);
  const double s = size * std::min(sb.width(), sb.height()) / std::max(rb.width(), rb.height());
  const Vec2 rc = rb.center(), sc = sb.center();
  auto map = [&](const Polygon& p) {
    Polygon q;
    for (Vec2 v : p.vertices) q.vertices.push_back(sc + s * (v - rc));
    return q;
  };
  Region out;
  out.outer = map(shape.outer);
  for (const auto& h : shape.holes) out.holes.push_back(map(h));
  return out;
}

Crop make_crop(const Superset& ss, const Region& r, const RigidTransform& pose) {
  Crop c;
  c.pose = pose;
  c.region = transform_region(r, pose);
  auto placements = crop_superset(ss, PreparedRegion(c.region));
  for (const auto& p : placements) c.total_area += p.area;
  c.graph = build_graph(std::move(placements), ss);
  return c;
}

std::vector<Crop> find_crops(const Superset& ss, const Region& r, int K, std::mt19937_64& rng) {
  if (K < 1 || K > 54) throw ConfigMismatch("K must lie in [1, 54], got " + std::to_string(K));
  const Symmetry& sym = ss.tileset.symmetry;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> rotations{0.0};
  while (rotations.size() < 6) rotations.push_back(unit(rng) * sym.theta);
  std::vector<Vec2> shifts{{0.0, 0.0}};
  while (shifts.size() < 9) {
    const double x = unit(rng) * sym.dx;
    shifts.push_back({x, unit(rng) * sym.dy});
  }

  // Rotations act about the region's bounding-box center.
  const Vec2 c = bounding_box(r.outer).center();
  struct Sample {
    int index;
    RigidTransform pose;
    PreparedRegion region;
    double area;
  };
  std::vector<Sample> samples;
  int index = 0;
  for (double rot : rotations)
    for (Vec2 t : shifts) {
      RigidTransform spin{normalize_angle(rot), {}};
      const Vec2 rc = spin.apply(c);
      RigidTransform pose{spin.rotation, c + t - rc};
      PreparedRegion pr(transform_region(r, pose));
      double area = 0.0;
      for (const auto& p : crop_superset(ss, pr)) area += p.area;
      samples.push_back({index++, pose, std::move(pr), area});
    }
  std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.area > b.area; });
  if (samples.front().area <= 0.0) throw NoCandidates("no candidate placement fits any of the 54 sampled poses");

  std::vector<Crop> out;
  for (const auto& s : samples) {
    if (static_cast<int>(out.size()) == K || s.area <= 0.0) break;
    Crop crop = make_crop(ss, r, s.pose);
    crop.index = s.index;
    out.push_back(std::move(crop));
  }
  return out;
}

std::vector<double> greedy_policy(const AdjacencyGraph& g, const std::vector<int>& selected, const Region& region) {
  const double eps = 1e-6 * g.max_perimeter;
  std::vector<double> c(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) c[i] = boundary_contact(g.nodes[i], region, eps);
  std::vector<char> sel(g.size(), 0);
  for (int i : selected) sel[static_cast<std::size_t>(i)] = 1;
  for (const auto& e : g.neighbor_edges) {
    if (sel[static_cast<std::size_t>(e.a)]) c[static_cast<std::size_t>(e.b)] += e.length;
    if (sel[static_cast<std::size_t>(e.b)]) c[static_cast<std::size_t>(e.a)] += e.length;
  }
  const double eta = 1e-3 * g.max_perimeter;
  const double top = c.empty() ? 0.0 : *std::max_element(c.begin(), c.end());
  for (double& v : c) v = (v + eta) / (top + eta);
  return c;
}

std::vector<double> policy_probabilities(const Policy& policy, const AdjacencyGraph& g, std::mt19937_64& rng) {
  switch (policy.kind) {
    case PolicyKind::gnn: {
      if (!policy.model) throw ConfigMismatch("gnn policy without a model");
      check_model(*policy.model, g);
      nn::NoGradGuard guard;
      const auto out = policy.model->forward(nn::make_inputs<float>(g));
      return {out.value().begin(), out.value().end()};
    }
    case PolicyKind::random: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::vector<double> x(g.size());
      for (double& v : x) v = 1.0 - unit(rng);  // (0, 1]
      return x;
    }
    case PolicyKind::greedy:
      return greedy_policy(g, {}, Region{});
    case PolicyKind::fixed:
      if (!policy.probabilities || policy.probabilities->size() != g.size())
        throw ConfigMismatch("fixed policy does not match the graph");
      return *policy.probabilities;
  }
  return {};
}

Solution run_algorithm1(const Policy& policy, const Crop& crop, std::mt19937_64& rng, const SolveOptions& opt,
                        const RoundCallback& on_round) {
  if (crop.graph.empty()) throw EmptyGraph("algorithm 1 on an empty crop");
  if (policy.kind == PolicyKind::greedy) {
    Solution s = run_greedy(crop);
    if (on_round) on_round(s.metrics.rounds, 0);
    return s;
  }
  const AdjacencyGraph& full = crop.graph;
  const auto ovl = overlap_lists(full);
  std::vector<int> ids(full.size());
  std::iota(ids.begin(), ids.end(), 0);
  AdjacencyGraph cur = full;
  std::vector<double> log_p(full.size(), 0.0);  // p starts at 1
  std::vector<char> blocked(full.size(), 0);
  std::vector<int> picked;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int k = 0;
  bool limit = false;
  while (!cur.empty()) {
    if (k == opt.round_cap) {
      limit = true;
      break;
    }
    ++k;
    std::vector<double> x;
    if (policy.kind == PolicyKind::fixed) {
      if (!policy.probabilities || policy.probabilities->size() != full.size())
        throw ConfigMismatch("fixed policy does not match the crop");
      for (int id : ids) x.push_back((*policy.probabilities)[static_cast<std::size_t>(id)]);
    } else {
      x = policy_probabilities(policy, cur, rng);
    }
    // Running geometric mean: p_k = (p_{k-1}^{k-1} x_k)^{1/k}.
    for (std::size_t i = 0; i < cur.size(); ++i) {
      double& lp = log_p[static_cast<std::size_t>(ids[i])];
      lp = ((k - 1) * lp + std::log(std::max(x[i], 1e-300))) / k;
    }
    std::vector<int> order(cur.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return log_p[static_cast<std::size_t>(ids[static_cast<std::size_t>(a)])] >
             log_p[static_cast<std::size_t>(ids[static_cast<std::size_t>(b)])];
    });
    for (int i : order) {
      const int id = ids[static_cast<std::size_t>(i)];
      if (blocked[static_cast<std::size_t>(id)]) break;
      const double p = std::exp(log_p[static_cast<std::size_t>(id)]);
      if (!opt.deterministic_accept && !(std::exp(p - 1.0) > unit(rng))) continue;
      picked.push_back(id);
      blocked[static_cast<std::size_t>(id)] = 1;
      for (int o : ovl[static_cast<std::size_t>(id)]) blocked[static_cast<std::size_t>(o)] = 1;
    }
    std::vector<int> keep;
    for (std::size_t i = 0; i < cur.size(); ++i)
      if (!blocked[static_cast<std::size_t>(ids[i])]) keep.push_back(static_cast<int>(i));
    if (keep.size() != cur.size()) {
      std::vector<int> next_ids;
      for (int i : keep) next_ids.push_back(ids[static_cast<std::size_t>(i)]);
      cur = induced_subgraph(cur, keep);
      ids = std::move(next_ids);
    }
    if (on_round) on_round(k, cur.size());
  }
  return finish(crop, std::move(picked), k, limit);
}

std::uint64_t job_seed(std::uint64_t master, int crop, int run) {
  return splitmix(splitmix(splitmix(master) ^ static_cast<std::uint64_t>(crop)) ^ static_cast<std::uint64_t>(run));
}

double candidate_union_area(const AdjacencyGraph& g) {
  std::vector<Polygon> polys;
  for (const auto& n : g.nodes) polys.push_back(n.polygon());
  return total_area(union_of(polys, 1e-7 * g.max_perimeter));
}

Metrics evaluate_solution(const Solution& sol, const Crop& crop, const LossWeights& w) {
  const AdjacencyGraph& g = crop.graph;
  Metrics m = sol.metrics;
  const double snap = 1e-7 * g.max_perimeter;
  std::vector<Polygon> all, chosen;
  for (const auto& n : g.nodes) all.push_back(n.polygon());
  for (const auto& p : sol.selected) chosen.push_back(p.polygon());
  const auto candidates = union_of(all, snap);
  const double ua = total_area(candidates);
  m.coverage = ua > 0.0 ? selected_area(g, sol.nodes) / ua : 0.0;
  m.contact_length = contact_length(g, sol.nodes);
  m.holes = 0;
  if (!sol.selected.empty()) {
    const double eps_area = 1e-8 * g.max_perimeter * g.max_perimeter;
    for (const auto& part : difference_of(candidates, union_of(chosen, snap), snap))
      if (total_area({part}) >= eps_area) ++m.holes;
  }
  if (!g.empty()) {
    std::vector<double> x(g.size(), 0.0);
    for (int i : sol.nodes) x[static_cast<std::size_t>(i)] = 1.0;
    m.loss = evaluate_loss(x, loss_graph(g), w).total;
  }
  return m;
}

TileResult tile_region(const Policy& policy, const Superset& ss, const Region& r, const TileOptions& opt) {
  const double t0 = now_ms();
  if (opt.runs < 1) throw ConfigMismatch("runs must be at least 1");
  std::vector<Crop> crops;
  if (opt.fixed_pose) {
    crops.push_back(make_crop(ss, r, *opt.fixed_pose));
    if (crops.front().graph.empty()) throw NoCandidates("no candidate placement fits the region");
  } else {
    std::mt19937_64 rng(splitmix(opt.seed ^ 0x63726f70ull));
    crops = find_crops(ss, r, opt.K, rng);
  }
  std::vector<double> union_area(crops.size());
  for (std::size_t c = 0; c < crops.size(); ++c) union_area[c] = candidate_union_area(crops[c].graph);

  const int total = static_cast<int>(crops.size()) * opt.runs;
  std::vector<Solution> results(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  TileProgress progress;
  progress.jobs_total = total;

  auto worker = [&] {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= total) return;
      const int c = j / opt.runs, run = j % opt.runs;
      try {
        std::mt19937_64 rng(job_seed(opt.seed, c, run));
        RoundCallback cb;
        if (opt.progress)
          cb = [&, c](int round, std::size_t) {
            std::lock_guard lock(mu);
            progress.crop = c;
            progress.round = round;
            progress.rounds_total++;
            opt.progress(progress);
          };
        Solution s = run_algorithm1(policy, crops[static_cast<std::size_t>(c)], rng, opt.solve, cb);
        s.crop_index = c;
        s.run_index = run;
        s.metrics.coverage = selected_area(crops[static_cast<std::size_t>(c)].graph, s.nodes) /
                             union_area[static_cast<std::size_t>(c)];
        std::lock_guard lock(mu);
        progress.jobs_done++;
        progress.best_coverage = std::max(progress.best_coverage, s.metrics.coverage);
        if (opt.progress) opt.progress(progress);
        results[static_cast<std::size_t>(j)] = std::move(s);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const int threads = std::max(1, std::min(opt.jobs, total));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  TileResult out;
  std::size_t best = 0;
  for (std::size_t j = 0; j < results.size(); ++j) {
    out.run_coverage.push_back(results[j].metrics.coverage);
    const auto& a = results[j].metrics;
    const auto& b = results[best].metrics;
    if (a.coverage > b.coverage + 1e-12 ||
        (std::abs(a.coverage - b.coverage) <= 1e-12 && a.contact_length > b.contact_length + 1e-12))
      best = j;
  }
  out.best = std::move(results[best]);
  out.crop = crops[static_cast<std::size_t>(out.best.crop_index)];
  out.best.metrics = evaluate_solution(out.best, out.crop, opt.solve.weights);
  out.best.metrics.wall_ms = now_ms() - t0;
  return out;
}

double selection_objective(const AdjacencyGraph& g, const std::vector<int>& nodes, double lambda) {
  double s = 0.0;
  for (int i : nodes) s += g.nodes[static_cast<std::size_t>(i)].area;
  return s + lambda * contact_length(g, nodes) / g.max_perimeter;
}

bool is_independent(const AdjacencyGraph& g, const std::vector<int>& nodes) {
  std::vector<char> sel(g.size(), 0);
  for (int i : nodes) sel[static_cast<std::size_t>(i)] = 1;
  for (auto [i, k] : g.overlap_edges)
    if (sel[static_cast<std::size_t>(i)] && sel[static_cast<std::size_t>(k)]) return false;
  return true;
}

ExactResult exact_solve(const AdjacencyGraph& g, const ExactOptions& opt) {
  const std::size_t n = g.size();
  if (static_cast<int>(n) > opt.cap && !opt.node_budget)
    throw CapacityExceeded("exact solve on " + std::to_string(n) + " nodes exceeds the cap of " +
                           std::to_string(opt.cap));
  const auto ovl = overlap_lists(g);
  struct Contact {
    int a, b;
    double w;
  };
  std::vector<Contact> contacts;
  for (const auto& e : g.neighbor_edges) contacts.push_back({e.a, e.b, opt.lambda * e.length / g.max_perimeter});

  struct State {
    std::vector<signed char> a;  // -1 undecided, 0 out, 1 in
    double value = 0.0;
    double bound = 0.0;
    std::size_t seq = 0;
  };

  auto set_in = [&](State& s, int i) {
    s.a[static_cast<std::size_t>(i)] = 1;
    for (int k : ovl[static_cast<std::size_t>(i)]) s.a[static_cast<std::size_t>(k)] = 0;
  };
  // Undecided nodes with every overlap neighbor excluded can only help.
  auto settle = [&](State& s) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (s.a[i] != -1) continue;
        bool free = true;
        for (int k : ovl[i]) free = free && s.a[static_cast<std::size_t>(k)] == 0;
        if (free) {
          set_in(s, static_cast<int>(i));
          changed = true;
        }
      }
    }
    s.value = 0.0;
    s.bound = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (s.a[i] == 1) s.value += g.nodes[i].area;
      if (s.a[i] == -1) s.bound += g.nodes[i].area;
    }
    for (const auto& c : contacts) {
      const int x = s.a[static_cast<std::size_t>(c.a)], y = s.a[static_cast<std::size_t>(c.b)];
      if (x == 1 && y == 1) s.value += c.w;
      else if (x != 0 && y != 0) s.bound += c.w;
    }
    s.bound += s.value;
  };
  auto complete = [&](const State& s) { return std::find(s.a.begin(), s.a.end(), -1) == s.a.end(); };
  auto selection = [&](const State& s) {
    std::vector<int> v;
    for (std::size_t i = 0; i < n; ++i)
      if (s.a[i] == 1) v.push_back(static_cast<int>(i));
    return v;
  };

  ExactResult res;
  // Incumbent from a largest-area-first pass.
  {
    State s{std::vector<signed char>(n, -1)};
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      return g.nodes[static_cast<std::size_t>(x)].area > g.nodes[static_cast<std::size_t>(y)].area;
    });
    for (int i : order)
      if (s.a[static_cast<std::size_t>(i)] == -1) set_in(s, i);
    settle(s);
    res.nodes = selection(s);
    res.objective = s.value;
  }

  auto worse = [](const State& x, const State& y) { return x.bound < y.bound || (x.bound == y.bound && x.seq > y.seq); };
  std::priority_queue<State, std::vector<State>, decltype(worse)> open(worse);
  std::size_t seq = 0;
  State root{std::vector<signed char>(n, -1)};
  settle(root);
  root.seq = seq++;
  open.push(std::move(root));
  const double tol = 1e-12;
  while (!open.empty()) {
    if (open.top().bound <= res.objective + tol) break;
    if (opt.node_budget && res.explored >= *opt.node_budget) break;
    State s = open.top();
    open.pop();
    ++res.explored;
    if (complete(s)) {
      if (s.value > res.objective + tol) {
        res.objective = s.value;
        res.nodes = selection(s);
      }
      continue;
    }
    int pivot = -1, degree = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (s.a[i] != -1) continue;
      int d = 0;
      for (int k : ovl[i]) d += s.a[static_cast<std::size_t>(k)] == -1;
      if (d > degree) {
        degree = d;
        pivot = static_cast<int>(i);
      }
    }
    State take = s, skip = std::move(s);
    set_in(take, pivot);
    skip.a[static_cast<std::size_t>(pivot)] = 0;
    for (State* child : {&take, &skip}) {
      settle(*child);
      if (complete(*child) && child->value > res.objective + tol) {
        res.objective = child->value;
        res.nodes = selection(*child);
      }
      if (child->bound > res.objective + tol) {
        child->seq = seq++;
        open.push(std::move(*child));
      }
    }
  }
  res.optimal = open.empty() || open.top().bound <= res.objective + tol;
  res.bound = res.optimal ? res.objective : std::max(res.objective, open.top().bound);
  return res;
}

}  // namespace tessel
