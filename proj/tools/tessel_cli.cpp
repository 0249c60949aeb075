// tessel: command-line front end for superset generation, training, tiling,
// benchmarks, rendering and the HTTP service.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "tessel/errors.hpp"
#include "tessel/io.hpp"
#include "tessel/service.hpp"
#include "tessel/solve.hpp"
#include "tessel/svg.hpp"
#include "tessel/train.hpp"

namespace fs = std::filesystem;
using namespace tessel;

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
  const char* v = std::getenv("TILING_LOG");
  if (!v) return Level::warn;
  const std::string s = v;
  if (s == "error") return Level::error;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  return Level::warn;
}

void log(Level l, const std::string& msg) {
  static const Level threshold = log_level();
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (l <= threshold) std::cerr << "[" << names[static_cast<int>(l)] << "] " << msg << "\n";
}

struct Globals {
  std::uint64_t seed = 1;
  std::string config;
  int jobs = std::max(1u, std::thread::hardware_concurrency());
};

struct Source {
  std::string tileset;
  std::string superset;
  int rings = -1;
};

void add_source(CLI::App* cmd, Source& s) {
  cmd->add_option("--tileset", s.tileset, "tile-set descriptor (JSON)");
  cmd->add_option("--superset", s.superset, "superset cache written by 'superset'");
  cmd->add_option("--rings", s.rings, "growth rings when building (default: descriptor's default_rings)");
}

Superset obtain_superset(const Source& s) {
  if (!s.superset.empty()) {
    log(Level::info, "loading superset " + s.superset);
    return load_superset(s.superset);
  }
  if (s.tileset.empty()) throw CLI::ValidationError("--tileset or --superset is required");
  const TileSet ts = load_tileset_file(s.tileset);
  const int rings = s.rings >= 0 ? s.rings : ts.default_rings;
  log(Level::info, "building superset for " + ts.name + " with " + std::to_string(rings) + " rings");
  return build_superset(ts, rings);
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::uint64_t config_digest(const std::string& tileset, const std::string& policy, const TileOptions& o,
                            const std::string& weights_bytes) {
  std::ostringstream os;
  os << tileset << '|' << policy << '|' << o.K << '|' << o.runs << '|' << o.seed << '|' << o.solve.round_cap << '|'
     << o.solve.deterministic_accept << '|' << fnv1a(weights_bytes);
  return fnv1a(os.str());
}

int run(int argc, char** argv) {
  CLI::App app{"Learn-to-tile pipeline: supersets, training, tiling and benchmarks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON config (service config for 'serve'; 'seed'/'jobs' defaults otherwise)");
  app.add_option("--jobs", g.jobs, "parallel workers")->capture_default_str();

  // superset
  auto* c_sup = app.add_subcommand("superset", "build and cache a superset of candidate placements");
  Source sup_src;
  std::string sup_out;
  std::size_t sup_cap = 20000;
  c_sup->add_option("--tileset", sup_src.tileset, "tile-set descriptor")->required();
  c_sup->add_option("--rings", sup_src.rings, "growth rings");
  c_sup->add_option("--cap", sup_cap, "maximum placement count")->capture_default_str();
  c_sup->add_option("--out", sup_out, "cache output path");

  // train
  auto* c_train = app.add_subcommand("train", "train the network on random shapes");
  Source tr_src;
  add_source(c_train, tr_src);
  TrainConfig tcfg;
  nn::ModelConfig mcfg;
  std::string tr_out;
  c_train->add_option("--out", tr_out, "weights output path")->required();
  c_train->add_option("--layers", mcfg.layers)->capture_default_str();
  c_train->add_option("--channels", mcfg.channels)->capture_default_str();
  c_train->add_option("--epochs", tcfg.epochs)->capture_default_str();
  c_train->add_option("--train-shapes", tcfg.train_shapes)->capture_default_str();
  c_train->add_option("--val-shapes", tcfg.val_shapes)->capture_default_str();
  c_train->add_option("--lr", tcfg.learning_rate)->capture_default_str();
  c_train->add_option("--patience", tcfg.patience)->capture_default_str();
  c_train->add_option("--metrics", tcfg.metrics_path, "JSON-lines metrics log");
  c_train->add_option("--checkpoints", tcfg.checkpoint_dir, "checkpoint directory");
  bool sum_loss = false;
  c_train->add_flag("--sum-loss", sum_loss, "ablation: add the loss terms instead of multiplying");

  // tile
  auto* c_tile = app.add_subcommand("tile", "tile a shape");
  Source ti_src;
  add_source(c_tile, ti_src);
  std::string ti_weights, ti_shape, ti_out, ti_svg, ti_policy = "gnn";
  double ti_size = 0.0;
  TileOptions topt;
  c_tile->add_option("--weights", ti_weights, "trained weights (gnn policy)");
  c_tile->add_option("--shape", ti_shape, "shape file (JSON polygon)")->required();
  c_tile->add_option("--size", ti_size, "fit the shape to this fraction of the superset (0: use as given)");
  c_tile->add_option("--policy", ti_policy, "gnn | greedy | random")->capture_default_str();
  c_tile->add_option("--runs", topt.runs)->capture_default_str();
  c_tile->add_option("--K", topt.K)->capture_default_str();
  c_tile->add_option("--round-cap", topt.solve.round_cap)->capture_default_str();
  c_tile->add_flag("--deterministic-accept", topt.solve.deterministic_accept);
  c_tile->add_option("--out", ti_out, "solution document path");
  c_tile->add_option("--svg", ti_svg, "SVG output path");

  // bench
  auto* c_bench = app.add_subcommand("bench", "coverage/holes/time rows per shape, size and policy");
  Source be_src;
  add_source(c_bench, be_src);
  std::string be_shapes, be_out, be_weights;
  std::vector<double> be_sizes{0.3, 0.5, 0.8};
  std::vector<std::string> be_policies{"greedy", "random"};
  int be_runs = 1, be_K = 1;
  c_bench->add_option("--shapes", be_shapes, "directory of shape files")->required();
  c_bench->add_option("--sizes", be_sizes, "shape sizes as superset fractions")->delimiter(',');
  c_bench->add_option("--policies", be_policies, "policies")->delimiter(',');
  c_bench->add_option("--weights", be_weights, "weights for the gnn policy");
  c_bench->add_option("--runs", be_runs)->capture_default_str();
  c_bench->add_option("--K", be_K)->capture_default_str();
  c_bench->add_option("--out", be_out, "CSV output (default stdout)");

  // render
  auto* c_render = app.add_subcommand("render", "render a solution document to SVG");
  Source re_src;
  add_source(c_render, re_src);
  std::string re_solution, re_shape, re_out;
  double re_size = 0.0;
  c_render->add_option("--solution", re_solution)->required();
  c_render->add_option("--shape", re_shape, "the shape the solution was computed for")->required();
  c_render->add_option("--size", re_size, "same --size as used for 'tile'");
  c_render->add_option("--out", re_out, "SVG path")->required();

  // serve
  auto* c_serve = app.add_subcommand("serve", "HTTP API for the design tool");
  int port = -1;
  c_serve->add_option("--port", port, "listen port (default 8080 or config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  nlohmann::json cfg_doc;
  if (!g.config.empty()) {
    cfg_doc = parse_json(read_file(g.config), "config '" + g.config + "'");
    if (app.count("--seed") == 0 && cfg_doc.contains("seed")) g.seed = cfg_doc.at("seed").get<std::uint64_t>();
    if (app.count("--jobs") == 0 && cfg_doc.contains("jobs")) g.jobs = cfg_doc.at("jobs").get<int>();
  }
  std::cout << "seed: " << g.seed << "\n";

  if (*c_sup) {
    const TileSet ts = load_tileset_file(sup_src.tileset);
    SupersetOptions so;
    so.rings = sup_src.rings >= 0 ? sup_src.rings : ts.default_rings;
    so.cap = sup_cap;
    const Superset ss = build_superset(ts, so);
    // Non-periodic sets show up as images of inner placements missing from
    // the superset.
    if (so.rings >= 2) {
      const SymmetryReport sym = check_symmetry_closure(ss);
      const std::size_t missing = sym.missing_dx + sym.missing_dy + sym.missing_rotation;
      if (missing > 0)
        throw TileSetError("superset does not close under the declared symmetry (" + std::to_string(missing) + " of " +
                           std::to_string(sym.checked) + " images missing)");
    }
    const AdjacencyGraph graph = build_graph(ss.placements, ss);
    std::cout << "tileset: " << ts.name << "\n"
              << "rings: " << so.rings << "\n"
              << "placements: " << ss.size() << "\n"
              << "poses: " << ss.pose_count() << "\n"
              << "overlap edges: " << graph.overlap_edges.size() << "\n"
              << "neighbor edges: " << graph.neighbor_edges.size() << "\n"
              << "mean degree: " << fixed(mean_degree(graph), 2) << "\n";
    if (!sup_out.empty()) {
      save_superset(sup_out, ss);
      std::cout << "written: " << sup_out << "\n";
    }
    return 0;
  }

  if (*c_train) {
    const Superset ss = obtain_superset(tr_src);
    mcfg.type_count = static_cast<int>(ss.tileset.type_count());
    mcfg.pose_count = static_cast<int>(ss.pose_count());
    mcfg.seed = g.seed;
    tcfg.seed = g.seed;
    if (sum_loss) tcfg.combine = LossCombine::sum;
    nn::Model<float> model(mcfg);
    std::cout << "parameters: " << model.parameter_count() << "\n";
    const TrainResult res = train(model, ss, tcfg, [](const std::string& m) { std::cout << m << "\n"; });
    save_weights(tr_out, res.best);
    std::cout << "initial val loss: " << fixed(res.initial_val_loss, 6) << "\n"
              << "best val loss: " << fixed(res.best_val_loss, 6) << " (epoch " << res.best_epoch << ")\n"
              << "written: " << tr_out << "\n";
    return 0;
  }

  if (*c_tile) {
    const PolicyKind kind = parse_policy(ti_policy);
    if (kind == PolicyKind::gnn && ti_weights.empty()) {
      std::cerr << "usage error: --policy gnn requires --weights\n";
      return 1;
    }
    const Superset ss = obtain_superset(ti_src);
    Region shape = load_region_file(ti_shape);
    if (ti_size > 0.0) shape = fit_region(shape, ss, ti_size);
    std::optional<nn::Model<float>> model;
    std::string wbytes;
    if (kind == PolicyKind::gnn) {
      model = load_weights(ti_weights, static_cast<int>(ss.tileset.type_count()), static_cast<int>(ss.pose_count()));
      wbytes = weights_bytes(*model);
    }
    Policy policy{kind, model ? &*model : nullptr};
    topt.seed = g.seed;
    topt.jobs = g.jobs;
    const TileResult res = tile_region(policy, ss, shape, topt);
    const auto& m = res.best.metrics;
    const SolutionInfo info{g.seed, policy.name(), config_digest(ss.tileset.name, policy.name(), topt, wbytes)};
    const std::string doc = solution_json(res.best, res.crop, ss.tileset, info).dump(2) + "\n";
    std::cout << "candidates: " << res.crop.graph.size() << "\n"
              << "tiles: " << res.best.selected.size() << "\n"
              << "coverage: " << fixed(100.0 * m.coverage, 2) << "%\n"
              << "holes: " << m.holes << "\n"
              << "rounds: " << m.rounds << (m.round_limit ? " (round limit)" : "") << "\n"
              << "wall time: " << fixed(m.wall_ms, 1) << " ms\n"
              << "digest: " << digest(doc) << "\n";
    if (!ti_out.empty()) write_file(ti_out, doc);
    if (!ti_svg.empty()) write_file(ti_svg, render_svg(res.best, res.crop, ss.tileset));
    return 0;
  }

  if (*c_bench) {
    const Superset ss = obtain_superset(be_src);
    std::vector<fs::path> files;
    if (fs::is_directory(be_shapes))
      for (const auto& e : fs::directory_iterator(be_shapes))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::cerr << "input error: no shape files in '" << be_shapes << "'\n";
      return 1;
    }
    std::optional<nn::Model<float>> model;
    std::vector<PolicyKind> kinds;
    for (const auto& p : be_policies) kinds.push_back(parse_policy(p));
    if (std::count(kinds.begin(), kinds.end(), PolicyKind::gnn)) {
      if (be_weights.empty()) {
        std::cerr << "usage error: the gnn policy requires --weights\n";
        return 1;
      }
      model = load_weights(be_weights, static_cast<int>(ss.tileset.type_count()), static_cast<int>(ss.pose_count()));
    }
    std::ofstream file;
    if (!be_out.empty()) file.open(be_out);
    std::ostream& out = be_out.empty() ? std::cout : file;
    out << "shape,size,policy,N_candidates,coverage,holes,wall_ms\n";
    for (const auto& f : files) {
      const Region shape = load_region_file(f.string());
      for (double size : be_sizes)
        for (PolicyKind k : kinds) {
          Policy policy{k, model ? &*model : nullptr};
          TileOptions o;
          o.runs = be_runs;
          o.K = be_K;
          o.seed = g.seed;
          o.jobs = g.jobs;
          const TileResult res = tile_region(policy, ss, fit_region(shape, ss, size), o);
          out << f.stem().string() << ',' << size << ',' << policy.name() << ',' << res.crop.graph.size() << ','
              << fixed(res.best.metrics.coverage, 6) << ',' << res.best.metrics.holes << ','
              << fixed(res.best.metrics.wall_ms, 3) << "\n";
        }
    }
    return 0;
  }

  if (*c_render) {
    const Superset ss = obtain_superset(re_src);
    Region shape = load_region_file(re_shape);
    if (re_size > 0.0) shape = fit_region(shape, ss, re_size);
    const auto doc = parse_json(read_file(re_solution), "solution '" + re_solution + "'");
    const Solution sol = solution_from_json(doc, ss.tileset);
    Crop crop;
    try {
      crop = make_crop(ss, shape, transform_from_json(doc.at("crop").at("pose")));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("solution crop pose: ") + e.what());
    }
    crop.index = doc.at("crop").value("index", 0);
    write_file(re_out, render_svg(sol, crop, ss.tileset));
    std::cout << "written: " << re_out << "\n";
    return 0;
  }

  if (*c_serve) {
    ServiceConfig sc = g.config.empty() ? ServiceConfig{} : load_service_config(g.config);
    if (port >= 0) sc.port = port;
    Service service(sc);
    std::cout << "listening on " << sc.host << ":" << sc.port << std::endl;
    return service.listen() ? 0 : 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const SupersetTooLarge& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const CapacityExceeded& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const GenerationFailed& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const tessel::error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
