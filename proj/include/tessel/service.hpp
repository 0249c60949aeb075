#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "tessel/nn/model.hpp"
#include "tessel/solve.hpp"
#include "tessel/tileset.hpp"

namespace httplib {
class Server;
}

namespace tessel {

struct ServiceEntry {
  std::string superset;  // cache path; empty or missing file: not built
  std::string weights;   // optional
};

struct ServiceConfig {
  std::string tileset_dir;
  std::map<std::string, ServiceEntry> tilesets;
  std::string host = "127.0.0.1";
  int port = 8080;
  int workers = 2;
  int threads_per_job = 1;
};

/// Relative paths resolve against the config file's directory.
ServiceConfig load_service_config(const std::string& path);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class Service {
public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse list_tilesets() const;
  ApiResponse crop(const nlohmann::json& req) const;
  ApiResponse submit(const nlohmann::json& req);
  ApiResponse job(const std::string& id) const;
  ApiResponse job_solution(const std::string& id) const;

  /// Registers the routes and CORS headers on `server`.
  void mount(httplib::Server& server);
  /// Blocks serving HTTP until stop() is called.
  bool listen();
  /// Binds an ephemeral port and serves on a background thread; returns the port.
  int listen_background();
  void stop();

private:
  struct Loaded {
    std::shared_ptr<const Superset> superset;
    std::shared_ptr<const nn::Model<float>> model;
  };
  struct Job {
    std::string id;
    nlohmann::json request;
    std::string state = "queued";
    TileProgress progress;
    std::string error;
    nlohmann::json solution;
    nlohmann::json metrics;
  };
  struct Request {
    std::string tileset;
    Region region;
    std::optional<RigidTransform> pose;
    PolicyKind policy = PolicyKind::greedy;
    int runs = 1;
    int K = 1;
    std::uint64_t seed = 1;
  };

  // Validates a crop/solve request body; throws ApiResponse on failure.
  Request parse_request(const nlohmann::json& req, bool solve) const;
  const Loaded* loaded(const std::string& name) const;
  void run_job(const std::shared_ptr<Job>& job);
  void worker_loop();
  std::string new_id();

  ServiceConfig cfg_;
  std::map<std::string, Loaded> sets_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::vector<std::thread> workers_;
  bool stopping_ = false;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
};

}  // namespace tessel
