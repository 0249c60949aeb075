#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"
#include "tessel/io.hpp"

using namespace tessel;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string(TESSEL_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string sets() { return data_dir() + "/tilesets/"; }

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tessel_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& f) const { return (dir_ / f).string(); }
  fs::path dir_;
};

std::string field(const std::string& out, const std::string& key) {
  std::smatch m;
  std::regex re(key + ": ([^\\n]*)");
  return std::regex_search(out, m, re) ? m[1].str() : std::string();
}

}  // namespace

TEST_F(Cli, SupersetCounts) {
  const CliRun r = cli("superset --tileset " + sets() + "square.json --rings 1 --out " + path("sq.tsup"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("seed: ", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("placements: 5\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("mean degree: "), std::string::npos);
  EXPECT_TRUE(fs::exists(path("sq.tsup")));
  EXPECT_EQ(load_superset(path("sq.tsup")).size(), 5u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli("superset --tileset " + sets() + "square.json --rings 10 --cap 10").code, 2);
  EXPECT_EQ(cli("superset --tileset " + path("missing.json")).code, 1);
  EXPECT_EQ(cli("superset --tileset " + sets() + "square.json --bogus-flag").code, 1);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("tile --tileset " + sets() + "square.json --shape " + data_dir() + "/shapes/disk.json --size 0.5 --policy gnn").code, 1);
  EXPECT_EQ(cli("tile --tileset " + sets() + "square.json --shape " + data_dir() + "/shapes/disk.json --policy fancy").code, 1);
}

TEST_F(Cli, IncompatibleWeights) {
  // train a tiny model on the single-square set, then use it with two prototiles
  const CliRun t = cli("train --tileset " + sets() + "square.json --rings 6 --layers 1 --channels 4 --epochs 1 "
                    "--train-shapes 3 --val-shapes 2 --out " + path("w.tgnn"));
  ASSERT_EQ(t.code, 0) << t.out;
  const CliRun r = cli("tile --tileset " + sets() + "square_domino.json --shape " + data_dir() +
                    "/shapes/disk.json --size 0.4 --policy gnn --weights " + path("w.tgnn"));
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, GreedyTilesDominoStrip) {
  write_file(path("strip.json"), polygon_json(rect(-3, -1, 6, 2)).dump());
  const CliRun r = cli("tile --tileset " + sets() + "domino.json --shape " + path("strip.json") + " --policy greedy --K 1");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(field(r.out, "coverage"), "100.00%") << r.out;
  EXPECT_EQ(field(r.out, "holes"), "0");
}

TEST_F(Cli, SameSeedSameDigest) {
  const std::string base = "--seed 7 tile --tileset " + sets() + "square_domino.json --shape " + data_dir() +
                           "/shapes/heart.json --size 0.5 --policy random --runs 1";
  const CliRun a = cli(base + " --out " + path("a.json") + " --svg " + path("a.svg"));
  const CliRun b = cli(base + " --out " + path("b.json") + " --svg " + path("b.svg"));
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out.rfind("seed: 7\n", 0), 0u);
  EXPECT_FALSE(field(a.out, "digest").empty());
  EXPECT_EQ(field(a.out, "digest"), field(b.out, "digest"));
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
  EXPECT_EQ(read_file(path("a.svg")), read_file(path("b.svg")));

  // render reproduces the tile command's SVG
  const CliRun r = cli("render --tileset " + sets() + "square_domino.json --solution " + path("a.json") + " --shape " +
                    data_dir() + "/shapes/heart.json --size 0.5 --out " + path("r.svg"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(read_file(path("r.svg")), read_file(path("a.svg")));
}

TEST_F(Cli, Bench) {
  fs::create_directories(path("shapes"));
  fs::copy_file(data_dir() + "/shapes/disk.json", path("shapes/disk.json"));
  fs::copy_file(data_dir() + "/shapes/star.json", path("shapes/star.json"));
  const CliRun r = cli("bench --tileset " + sets() + "square_domino.json --shapes " + path("shapes") +
                    " --sizes 0.3,0.4 --policies greedy,random --out " + path("b.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = read_file(path("b.csv"));
  std::vector<std::string> lines;
  std::stringstream ss(csv);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 9u) << csv;
  EXPECT_EQ(lines[0], "shape,size,policy,N_candidates,coverage,holes,wall_ms");

  fs::create_directories(path("empty"));
  EXPECT_EQ(cli("bench --tileset " + sets() + "square.json --shapes " + path("empty")).code, 1);
}

TEST_F(Cli, ConfigSuppliesSeed) {
  write_file(path("cfg.json"), R"({"seed": 42, "jobs": 2})");
  const CliRun r = cli("--config " + path("cfg.json") + " superset --tileset " + sets() + "square.json --rings 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("seed: 42\n", 0), 0u) << r.out;
}
