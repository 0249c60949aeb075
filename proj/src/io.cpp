#include "tessel/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tessel/errors.hpp"
#include "tessel/train.hpp"

namespace tessel {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

using nlohmann::json;

class Writer {
public:
  template <class T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out_.append(b, sizeof(T));
  }
  void raw(std::string_view s) { out_.append(s); }
  void str(std::string_view s) {
    put<std::uint64_t>(s.size());
    raw(s);
  }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

// Truncation and format errors report the byte offset they occurred at.
template <class Error>
class Reader {
public:
  Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(raw(get<std::uint64_t>())); }
  void expect(std::string_view magic) {
    if (data_.substr(pos_, magic.size()) != magic)
      throw Error(what_ + ": bad magic at offset " + std::to_string(pos_) + ", expected '" + std::string(magic) + "'");
    pos_ += magic.size();
  }
  bool at_end() const { return pos_ == data_.size(); }
  bool peek(std::string_view magic) const { return data_.substr(pos_, magic.size()) == magic; }
  std::size_t offset() const { return pos_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(what_ + ": " + msg + " at offset " + std::to_string(pos_));
  }

private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n)
      throw Error(what_ + ": truncated at offset " + std::to_string(pos_) + " (need " + std::to_string(n) +
                  " bytes, have " + std::to_string(data_.size() - pos_) + ")");
  }

  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

void write_model(Writer& w, const nn::Model<float>& m) {
  w.raw("TGNN");
  w.put<std::uint32_t>(kWeightsVersion);
  const auto& c = m.config();
  for (int v : {c.layers, c.channels, c.type_count, c.pose_count}) w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  for (const auto& t : m.parameters())
    for (float v : t.value()) w.put<float>(v);
}

nn::Model<float> read_model(Reader<WeightFormatError>& r) {
  r.expect("TGNN");
  const auto version = r.get<std::uint32_t>();
  if (version != kWeightsVersion) r.fail("unsupported weights version " + std::to_string(version));
  nn::ModelConfig cfg;
  cfg.layers = static_cast<int>(r.get<std::uint32_t>());
  cfg.channels = static_cast<int>(r.get<std::uint32_t>());
  cfg.type_count = static_cast<int>(r.get<std::uint32_t>());
  cfg.pose_count = static_cast<int>(r.get<std::uint32_t>());
  if (cfg.layers < 1 || cfg.layers > 1024 || cfg.channels < 1 || cfg.channels > 4096 || cfg.type_count < 1 ||
      cfg.pose_count < 0 || cfg.pose_count > 1000000)
    r.fail("implausible model configuration");
  nn::Model<float> m(cfg);
  for (auto t : m.parameters())
    for (float& v : t.value()) v = r.get<float>();
  return m;
}

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + " at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string digest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

// ---------------------------------------------------------------------------
// Weights

std::string weights_bytes(const nn::Model<float>& m) {
  Writer w;
  write_model(w, m);
  return w.take();
}

nn::Model<float> weights_from_bytes(std::string_view bytes) {
  Reader<WeightFormatError> r(bytes, "weights");
  return read_model(r);
}

void save_weights(const std::string& path, const nn::Model<float>& m) { write_file(path, weights_bytes(m)); }

nn::Model<float> load_weights(const std::string& path) {
  const std::string data = read_file(path);
  return weights_from_bytes(data);
}

nn::Model<float> load_weights(const std::string& path, int type_count, int pose_count) {
  auto m = load_weights(path);
  const auto& c = m.config();
  if (c.type_count != type_count || c.pose_count != pose_count)
    throw ConfigMismatch("weights were trained for N_t=" + std::to_string(c.type_count) + ", N_p=" +
                         std::to_string(c.pose_count) + "; tile set has N_t=" + std::to_string(type_count) +
                         ", N_p=" + std::to_string(pose_count));
  return m;
}

void save_checkpoint(const std::string& path, const nn::Model<float>& m, const Adam& opt) {
  Writer w;
  write_model(w, m);
  w.raw("ADAM");
  w.put<std::int64_t>(opt.steps());
  for (const auto* buf : {&opt.first_moment(), &opt.second_moment()})
    for (const auto& row : *buf)
      for (float v : row) w.put<float>(v);
  write_file(path, w.take());
}

nn::Model<float> load_checkpoint(const std::string& path, Adam* opt) {
  const std::string data = read_file(path);
  Reader<WeightFormatError> r(data, "checkpoint");
  auto m = read_model(r);
  if (opt && !r.at_end()) {
    r.expect("ADAM");
    const auto t = r.get<std::int64_t>();
    std::vector<std::vector<float>> mm, vv;
    for (auto* buf : {&mm, &vv})
      for (const auto& p : m.parameters()) {
        std::vector<float> row(p.size());
        for (float& v : row) v = r.get<float>();
        buf->push_back(std::move(row));
      }
    opt->restore(t, std::move(mm), std::move(vv));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Geometry documents

json transform_json(const RigidTransform& t) {
  return {{"rotation", t.rotation}, {"tx", t.translation.x}, {"ty", t.translation.y}};
}

RigidTransform transform_from_json(const json& j) {
  return {j.at("rotation").get<double>(), {j.at("tx").get<double>(), j.at("ty").get<double>()}};
}

json polygon_json(const Polygon& p) {
  json a = json::array();
  for (Vec2 v : p.vertices) a.push_back(vec_json(v));
  return a;
}

Polygon polygon_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("polygon must be an array of [x, y] pairs");
  Polygon p;
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ParseError("vertex must be [x, y]");
    p.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return p;
}

Region region_from_json(const json& j) {
  Region r;
  if (j.is_array()) {
    r.outer = polygon_from_json(j);
  } else if (j.is_object() && j.contains("outer")) {
    r.outer = polygon_from_json(j.at("outer"));
    if (j.contains("holes"))
      for (const auto& h : j.at("holes")) r.holes.push_back(polygon_from_json(h));
  } else {
    throw ParseError("region must be a vertex array or {outer, holes}");
  }
  return r;
}

Region load_region_file(const std::string& path) {
  const std::string text = read_file(path);
  const json doc = parse_json(text, "shape '" + path + "'");
  try {
    return region_from_json(doc.is_object() && doc.contains("polygon") ? doc.at("polygon") : doc);
  } catch (const json::exception& e) {
    throw ParseError("shape '" + path + "': " + e.what());
  }
}

json tileset_json(const TileSet& ts) {
  json tiles = json::array();
  for (const auto& p : ts.prototiles) tiles.push_back({{"vertices", polygon_json(p.polygon)}, {"color", p.color}});
  return {{"name", ts.name},
          {"prototiles", tiles},
          {"symmetry", {{"theta", ts.symmetry.theta}, {"dx", ts.symmetry.dx}, {"dy", ts.symmetry.dy}}},
          {"default_rings", ts.default_rings}};
}

// ---------------------------------------------------------------------------
// Superset cache

std::string superset_bytes(const Superset& ss) {
  Writer w;
  w.raw("TSUP");
  w.put<std::uint32_t>(kSupersetVersion);
  w.str(tileset_json(ss.tileset).dump());
  w.put<std::uint64_t>(ss.placements.size());
  for (std::size_t i = 0; i < ss.placements.size(); ++i) {
    const auto& p = ss.placements[i];
    w.put<std::int32_t>(p.prototile);
    w.put<std::int32_t>(i < ss.generation.size() ? ss.generation[i] : -1);
    w.put<double>(p.transform.rotation);
    w.put<double>(p.transform.translation.x);
    w.put<double>(p.transform.translation.y);
  }
  w.put<std::uint64_t>(ss.poses.size());
  for (std::size_t i = 0; i < ss.poses.size(); ++i) {
    const auto& k = ss.poses[i];
    w.put<std::int32_t>(k.from);
    w.put<std::int32_t>(k.to);
    for (auto v : {k.rotation, k.tx, k.ty, k.length}) w.put<std::int64_t>(v);
    w.put<double>(i < ss.pose_lengths.size() ? ss.pose_lengths[i] : 0.0);
  }
  return w.take();
}

Superset superset_from_bytes(std::string_view bytes) {
  Reader<ParseError> r(bytes, "superset cache");
  r.expect("TSUP");
  const auto version = r.get<std::uint32_t>();
  if (version > kSupersetVersion)
    throw VersionError("superset cache version " + std::to_string(version) + " is newer than supported version " +
                       std::to_string(kSupersetVersion));
  if (version == 0) r.fail("invalid version 0");
  Superset ss;
  ss.tileset = load_tileset(r.str());
  const auto n = r.get<std::uint64_t>();
  if (n > bytes.size()) r.fail("implausible placement count");
  for (std::uint64_t i = 0; i < n; ++i) {
    const int proto = r.get<std::int32_t>();
    const int gen = r.get<std::int32_t>();
    RigidTransform t;
    t.rotation = r.get<double>();
    t.translation.x = r.get<double>();
    t.translation.y = r.get<double>();
    if (proto < 0 || static_cast<std::size_t>(proto) >= ss.tileset.type_count()) r.fail("prototile index out of range");
    ss.placements.push_back(make_placement(ss.tileset, proto, t));
    ss.generation.push_back(gen);
  }
  const auto np = r.get<std::uint64_t>();
  if (np > bytes.size()) r.fail("implausible pose count");
  for (std::uint64_t i = 0; i < np; ++i) {
    PoseKey k;
    k.from = r.get<std::int32_t>();
    k.to = r.get<std::int32_t>();
    k.rotation = r.get<std::int64_t>();
    k.tx = r.get<std::int64_t>();
    k.ty = r.get<std::int64_t>();
    k.length = r.get<std::int64_t>();
    ss.poses.push_back(k);
    ss.pose_lengths.push_back(r.get<double>());
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return ss;
}

void save_superset(const std::string& path, const Superset& ss) { write_file(path, superset_bytes(ss)); }

Superset load_superset(const std::string& path) {
  const std::string data = read_file(path);
  return superset_from_bytes(data);
}

// ---------------------------------------------------------------------------
// Graph and solution documents

json graph_json(const AdjacencyGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"prototile", n.prototile},
                     {"transform", transform_json(n.transform)},
                     {"vertices", polygon_json(n.polygon())},
                     {"area", n.area}});
  json ovl = json::array();
  for (auto [i, k] : g.overlap_edges) ovl.push_back({i, k});
  json nbr = json::array();
  for (const auto& e : g.neighbor_edges) nbr.push_back({{"a", e.a}, {"b", e.b}, {"length", e.length}, {"pose", e.pose}});
  auto matrix = [](const std::vector<double>& v, int cols) {
    json m = json::array();
    for (std::size_t i = 0; i + static_cast<std::size_t>(cols) <= v.size(); i += static_cast<std::size_t>(cols))
      m.push_back(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(i),
                                      v.begin() + static_cast<std::ptrdiff_t>(i) + cols));
    return m;
  };
  return {{"version", kDocumentVersion},
          {"type_count", g.type_count},
          {"pose_count", g.pose_count},
          {"max_perimeter", g.max_perimeter},
          {"nodes", nodes},
          {"overlap_edges", ovl},
          {"neighbor_edges", nbr},
          {"node_features", matrix(g.node_features(), g.node_feature_dim())},
          {"edge_features", matrix(g.edge_features(), g.edge_feature_dim())}};
}

AdjacencyGraph graph_from_json(const json& j, const TileSet& ts) {
  try {
    const int version = j.at("version").get<int>();
    if (version > kDocumentVersion) throw VersionError("graph document version " + std::to_string(version));
    AdjacencyGraph g;
    g.type_count = j.at("type_count").get<int>();
    g.pose_count = j.at("pose_count").get<int>();
    g.max_perimeter = j.at("max_perimeter").get<double>();
    for (const auto& n : j.at("nodes"))
      g.nodes.push_back(make_placement(ts, n.at("prototile").get<int>(), transform_from_json(n.at("transform"))));
    for (const auto& e : j.at("overlap_edges")) g.overlap_edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    for (const auto& e : j.at("neighbor_edges"))
      g.neighbor_edges.push_back(
          {e.at("a").get<int>(), e.at("b").get<int>(), e.at("length").get<double>(), e.at("pose").get<int>()});
    return g;
  } catch (const json::exception& e) {
    throw ParseError(std::string("graph document: ") + e.what());
  }
}

json solution_json(const Solution& sol, const Crop& crop, const TileSet& ts, const SolutionInfo& info) {
  json tiles = json::array();
  for (std::size_t i = 0; i < sol.selected.size(); ++i) {
    const auto& p = sol.selected[i];
    tiles.push_back({{"node", i < sol.nodes.size() ? sol.nodes[i] : -1},
                     {"prototile", p.prototile},
                     {"transform", transform_json(p.transform)},
                     {"vertices", polygon_json(p.polygon())},
                     {"color", ts.prototiles[static_cast<std::size_t>(p.prototile)].color}});
  }
  const auto& m = sol.metrics;
  char cfg[17];
  std::snprintf(cfg, sizeof cfg, "%016llx", static_cast<unsigned long long>(info.config_digest));
  return {{"version", kDocumentVersion},
          {"tileset", ts.name},
          {"policy", info.policy},
          {"seed", info.seed},
          {"config_digest", cfg},
          {"crop", {{"index", crop.index}, {"pose", transform_json(crop.pose)}, {"candidates", crop.graph.size()}}},
          {"run", {{"crop", sol.crop_index}, {"run", sol.run_index}}},
          {"metrics",
           {{"coverage", m.coverage},
            {"holes", m.holes},
            {"contact_length", m.contact_length},
            {"loss", m.loss},
            {"rounds", m.rounds},
            {"round_limit", m.round_limit}}},
          {"tiles", tiles}};
}

Solution solution_from_json(const json& j, const TileSet& ts) {
  try {
    const int version = j.at("version").get<int>();
    if (version > kDocumentVersion) throw VersionError("solution document version " + std::to_string(version));
    Solution s;
    for (const auto& t : j.at("tiles")) {
      s.nodes.push_back(t.at("node").get<int>());
      s.selected.push_back(make_placement(ts, t.at("prototile").get<int>(), transform_from_json(t.at("transform"))));
    }
    const auto& m = j.at("metrics");
    s.metrics.coverage = m.at("coverage").get<double>();
    s.metrics.holes = m.at("holes").get<int>();
    s.metrics.contact_length = m.at("contact_length").get<double>();
    s.metrics.loss = m.at("loss").get<double>();
    s.metrics.rounds = m.at("rounds").get<int>();
    s.metrics.round_limit = m.at("round_limit").get<bool>();
    s.crop_index = j.at("run").at("crop").get<int>();
    s.run_index = j.at("run").at("run").get<int>();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("solution document: ") + e.what());
  }
}

}  // namespace tessel
