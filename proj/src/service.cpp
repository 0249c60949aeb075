#include "tessel/service.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

#include "httplib.h"
#include "tessel/errors.hpp"
#include "tessel/io.hpp"

namespace tessel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ApiResponse fail(int status, const std::string& msg) { return {status, {{"error", msg}}}; }

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path q(p);
  return q.is_absolute() ? p : (base / q).lexically_normal().string();
}

json summary(const TileSet& ts) {
  json j = tileset_json(ts);
  j["quantum"] = ts.quantum;
  return j;
}

}  // namespace

ServiceConfig load_service_config(const std::string& path) {
  const std::string text = read_file(path);
  const json doc = parse_json(text, "service config '" + path + "'");
  const fs::path base = fs::path(path).parent_path();
  ServiceConfig cfg;
  try {
    cfg.tileset_dir = resolve(base, doc.value("tileset_dir", std::string{}));
    cfg.host = doc.value("host", cfg.host);
    cfg.port = doc.value("port", cfg.port);
    cfg.workers = doc.value("workers", cfg.workers);
    cfg.threads_per_job = doc.value("threads_per_job", cfg.threads_per_job);
    if (doc.contains("tilesets"))
      for (const auto& [name, e] : doc.at("tilesets").items())
        cfg.tilesets[name] = {resolve(base, e.value("superset", std::string{})),
                              resolve(base, e.value("weights", std::string{}))};
  } catch (const json::exception& e) {
    throw ParseError("service config '" + path + "': " + e.what());
  }
  return cfg;
}

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  for (const auto& [name, entry] : cfg_.tilesets) {
    Loaded l;
    if (!entry.superset.empty() && fs::exists(entry.superset))
      l.superset = std::make_shared<const Superset>(load_superset(entry.superset));
    if (l.superset && !entry.weights.empty() && fs::exists(entry.weights))
      l.model = std::make_shared<const nn::Model<float>>(load_weights(
          entry.weights, static_cast<int>(l.superset->tileset.type_count()), static_cast<int>(l.superset->pose_count())));
    sets_[name] = std::move(l);
  }
  for (int i = 0; i < std::max(1, cfg_.workers); ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() {
  stop();
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : workers_) t.join();
}

const Service::Loaded* Service::loaded(const std::string& name) const {
  auto it = sets_.find(name);
  return it == sets_.end() ? nullptr : &it->second;
}

ApiResponse Service::list_tilesets() const {
  json out = json::array();
  if (cfg_.tileset_dir.empty()) return {200, out};
  std::error_code ec;
  if (!fs::is_directory(cfg_.tileset_dir, ec)) return fail(500, "tile-set directory is unreadable");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg_.tileset_dir, ec))
    if (e.path().extension() == ".json") files.push_back(e.path());
  if (ec) return fail(500, "tile-set directory is unreadable: " + ec.message());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      const TileSet ts = load_tileset_file(f.string());
      json j = summary(ts);
      const Loaded* l = loaded(ts.name);
      j["superset_ready"] = l && l->superset;
      j["model_ready"] = l && l->model;
      if (l && l->superset) j["candidates"] = l->superset->size();
      out.push_back(std::move(j));
    } catch (const std::exception& e) {
      out.push_back({{"file", f.filename().string()}, {"error", e.what()}});
    }
  }
  return {200, out};
}

Service::Request Service::parse_request(const json& req, bool solve) const {
  Request r;
  try {
    if (!req.is_object()) throw ApiResponse(fail(422, "request body must be a JSON object"));
    if (!req.contains("tileset") || !req.at("tileset").is_string())
      throw ApiResponse(fail(422, "missing tileset name"));
    r.tileset = req.at("tileset").get<std::string>();
    const Loaded* l = loaded(r.tileset);
    if (!l) throw ApiResponse(fail(404, "unknown tile set '" + r.tileset + "'"));
    if (!l->superset) throw ApiResponse(fail(409, "superset for '" + r.tileset + "' is not built"));
    if (!req.contains("polygon")) throw ApiResponse(fail(422, "missing polygon"));
    r.region = region_from_json(req.at("polygon"));
    const Tolerances& tol = l->superset->tileset.tol;
    validate_polygon(r.region.outer, tol);
    for (auto& h : r.region.holes) {
      if (signed_area(h.vertices) > 0.0) h = reversed(h);
      validate_polygon(reversed(h), tol);
    }
    if (req.contains("pose") && !req.at("pose").is_null()) r.pose = transform_from_json(req.at("pose"));
    if (!solve) return r;
    r.policy = l->model ? PolicyKind::gnn : PolicyKind::greedy;
    if (req.contains("policy")) r.policy = parse_policy(req.at("policy").get<std::string>());
    if (r.policy == PolicyKind::gnn && !l->model)
      throw ApiResponse(fail(409, "no model loaded for '" + r.tileset + "'"));
    r.runs = req.value("runs", 1);
    r.K = req.value("K", 1);
    r.seed = req.value("seed", std::uint64_t{1});
    if (r.runs < 1 || r.runs > 1000) throw ApiResponse(fail(422, "runs must lie in [1, 1000]"));
    if (r.K < 1 || r.K > 54) throw ApiResponse(fail(422, "K must lie in [1, 54]"));
  } catch (const json::exception& e) {
    throw ApiResponse(fail(422, std::string("malformed request: ") + e.what()));
  } catch (const ConfigMismatch& e) {
    throw ApiResponse(fail(422, e.what()));
  } catch (const InvalidPolygon& e) {
    throw ApiResponse(fail(422, e.what()));
  } catch (const DegeneratePolygon& e) {
    throw ApiResponse(fail(422, e.what()));
  } catch (const ParseError& e) {
    throw ApiResponse(fail(422, e.what()));
  }
  return r;
}

ApiResponse Service::crop(const json& req) const {
  try {
    const Request r = parse_request(req, false);
    const Superset& ss = *loaded(r.tileset)->superset;
    const Region posed = transform_region(r.region, r.pose.value_or(RigidTransform{}));
    const auto placements = crop_superset(ss, PreparedRegion(posed));
    json outlines = json::array();
    for (const auto& p : placements) outlines.push_back(polygon_json(p.polygon()));
    return {200, {{"candidate_count", placements.size()}, {"candidate_outlines", outlines}}};
  } catch (const ApiResponse& e) {
    return e;
  }
}

std::string Service::new_id() {
  static thread_local std::random_device rd;
  std::uniform_int_distribution<std::uint32_t> d;
  char buf[33];
  std::snprintf(buf, sizeof buf, "%08x%08x%08x%08x", d(rd), d(rd), d(rd), d(rd));
  return buf;
}

ApiResponse Service::submit(const json& req) {
  try {
    parse_request(req, true);
  } catch (const ApiResponse& e) {
    return e;
  }
  auto job = std::make_shared<Job>();
  job->request = req;
  {
    std::lock_guard lock(mu_);
    do job->id = new_id();
    while (jobs_.count(job->id));
    jobs_[job->id] = job;
    queue_.push_back(job);
  }
  cv_.notify_one();
  return {202, {{"job_id", job->id}}};
}

void Service::worker_loop() {
  for (;;) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_ && queue_.empty()) return;
      job = queue_.front();
      queue_.pop_front();
      job->state = "running";
    }
    run_job(job);
  }
}

void Service::run_job(const std::shared_ptr<Job>& job) {
  try {
    const Request r = parse_request(job->request, true);
    const Loaded& l = *loaded(r.tileset);
    Policy policy;
    policy.kind = r.policy;
    policy.model = l.model.get();
    TileOptions opt;
    opt.K = r.K;
    opt.runs = r.runs;
    opt.seed = r.seed;
    opt.jobs = cfg_.threads_per_job;
    opt.fixed_pose = r.pose;
    opt.progress = [this, job](const TileProgress& p) {
      std::lock_guard lock(mu_);
      job->progress = p;
    };
    const TileResult res = tile_region(policy, *l.superset, r.region, opt);
    SolutionInfo info{r.seed, policy.name(), fnv1a(job->request.dump())};
    json doc = solution_json(res.best, res.crop, l.superset->tileset, info);
    std::lock_guard lock(mu_);
    job->metrics = doc.at("metrics");
    job->metrics["wall_ms"] = res.best.metrics.wall_ms;
    job->solution = std::move(doc);
    job->state = "done";
  } catch (const ApiResponse& e) {
    std::lock_guard lock(mu_);
    job->error = e.body.value("error", std::string("invalid request"));
    job->state = "failed";
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    job->error = e.what();
    job->state = "failed";
  }
}

ApiResponse Service::job(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return fail(404, "unknown job");
  const Job& j = *it->second;
  json out{{"id", j.id},
           {"state", j.state},
           {"request", j.request},
           {"progress",
            {{"round", j.progress.round},
             {"rounds_total", j.progress.rounds_total},
             {"crop", j.progress.crop},
             {"jobs_done", j.progress.jobs_done},
             {"jobs_total", j.progress.jobs_total},
             {"best_coverage", j.progress.best_coverage}}}};
  if (j.state == "done") out["metrics"] = j.metrics;
  if (j.state == "failed") out["error"] = j.error;
  return {200, out};
}

ApiResponse Service::job_solution(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return fail(404, "unknown job");
  const Job& j = *it->second;
  if (j.state == "failed") return fail(409, "job failed: " + j.error);
  if (j.state != "done") return fail(409, "job is " + j.state);
  return {200, j.solution};
}

void Service::mount(httplib::Server& s) {
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto body = [](const httplib::Request& req, httplib::Response& res, json& out) {
    try {
      out = json::parse(req.body);
      return true;
    } catch (const json::parse_error& e) {
      res.status = 422;
      res.set_content(json{{"error", std::string("malformed JSON at byte ") + std::to_string(e.byte)}}.dump(),
                      "application/json");
      return false;
    }
  };
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.Get("/api/tilesets", [this, send](const httplib::Request&, httplib::Response& res) { send(res, list_tilesets()); });
  s.Post("/api/crop", [this, send, body](const httplib::Request& req, httplib::Response& res) {
    json j;
    if (body(req, res, j)) send(res, crop(j));
  });
  s.Post("/api/solve", [this, send, body](const httplib::Request& req, httplib::Response& res) {
    json j;
    if (body(req, res, j)) send(res, submit(j));
  });
  s.Get(R"(/api/jobs/([0-9a-f]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, job(req.matches[1]));
  });
  s.Get(R"(/api/jobs/([0-9a-f]+)/solution)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, job_solution(req.matches[1]));
  });
}

bool Service::listen() {
  server_ = std::make_unique<httplib::Server>();
  mount(*server_);
  return server_->listen(cfg_.host, cfg_.port);
}

int Service::listen_background() {
  server_ = std::make_unique<httplib::Server>();
  mount(*server_);
  const int port = server_->bind_to_any_port(cfg_.host);
  if (port < 0) throw InvariantViolation("cannot bind a port on " + cfg_.host);
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void Service::stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace tessel
