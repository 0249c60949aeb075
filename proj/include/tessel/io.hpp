#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tessel/graph.hpp"
#include "tessel/nn/model.hpp"
#include "tessel/solve.hpp"
#include "tessel/tileset.hpp"

namespace tessel {

class Adam;

// Weights: "TGNN", u32 version, u32 L, C, N_t, N_p, then float32 parameters
// (little endian) in declaration order. Checkpoints append "ADAM", the step
// count and both moment buffers.
inline constexpr std::uint32_t kWeightsVersion = 1;

std::string weights_bytes(const nn::Model<float>& m);
nn::Model<float> weights_from_bytes(std::string_view bytes);
void save_weights(const std::string& path, const nn::Model<float>& m);
nn::Model<float> load_weights(const std::string& path);
/// Also checks the model against a tile set's type and pose counts.
nn::Model<float> load_weights(const std::string& path, int type_count, int pose_count);

void save_checkpoint(const std::string& path, const nn::Model<float>& m, const Adam& opt);
/// Restores model parameters and, when present, optimizer state.
nn::Model<float> load_checkpoint(const std::string& path, Adam* opt);

// Superset cache: "TSUP", u32 version, tile-set JSON, placements, pose table.
inline constexpr std::uint32_t kSupersetVersion = 1;

std::string superset_bytes(const Superset& ss);
Superset superset_from_bytes(std::string_view bytes);
void save_superset(const std::string& path, const Superset& ss);
Superset load_superset(const std::string& path);

nlohmann::json tileset_json(const TileSet& ts);

nlohmann::json transform_json(const RigidTransform& t);
RigidTransform transform_from_json(const nlohmann::json& j);
nlohmann::json polygon_json(const Polygon& p);
Polygon polygon_from_json(const nlohmann::json& j);
/// Accepts [[x, y], ...] or {"outer": [...], "holes": [[...], ...]}.
Region region_from_json(const nlohmann::json& j);
Region load_region_file(const std::string& path);

inline constexpr int kDocumentVersion = 1;

nlohmann::json graph_json(const AdjacencyGraph& g);
AdjacencyGraph graph_from_json(const nlohmann::json& j, const TileSet& ts);

struct SolutionInfo {
  std::uint64_t seed = 0;
  std::string policy;
  std::uint64_t config_digest = 0;
};

/// Tiles, metrics (wall time excluded), seed and config digest.
nlohmann::json solution_json(const Solution& sol, const Crop& crop, const TileSet& ts, const SolutionInfo& info);
Solution solution_from_json(const nlohmann::json& j, const TileSet& ts);
/// FNV-1a over the compact serialization, as 16 hex digits.
std::string digest(std::string_view bytes);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ull);

/// Parses JSON text; syntax errors become ParseError naming the byte offset.
nlohmann::json parse_json(std::string_view text, const std::string& what);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view data);

}  // namespace tessel
