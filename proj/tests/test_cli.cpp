// SPDX-License-Identifier: Apache-2.0

#include "gfnrom/commands.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>

using namespace gfnrom;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::string& args, const std::string& env = "") {
  const fs::path err = fs::temp_directory_path() / "gfnrom_cli_stderr.txt";
  const std::string cmd = env + " " + std::string(GFNROM_CLI_PATH) + " " + args + " 2>" + err.string();
  Run r{0, "", ""};
  FILE* p = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  r.code = WEXITSTATUS(pclose(p));
  std::ifstream in(err);
  r.err.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

fs::path fresh(const std::string& name) {
  auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool single_error_line(const Run& r) {
  return r.code != 0 && std::count(r.err.begin(), r.err.end(), '\n') == 1 &&
         r.err.rfind("gfnrom: error: ", 0) == 0;
}

// Small and quick: 12x12 base mesh, 4x4 parameters, tiny network.
const char* kSmall =
    " --base-side 12 --grid 4x4 ";

void write_small_config(const fs::path& path, const std::string& extra = "") {
  std::ofstream(path) << R"({"seed": 5, "data": {"family": "smooth", "grid": [4, 4], "base_side": 12},
 "model": {"gfn_width": 16, "mapper_hidden": [8]}, "train": {"epochs": 20})" << extra << "}}\n";
}

}  // namespace

TEST(Config, Defaults) {
  const RunConfig paper = RunConfig::defaults(Profile::Paper);
  EXPECT_EQ(paper.train.epochs, 5000u);
  EXPECT_EQ(paper.train.lr, 1e-3);
  EXPECT_EQ(paper.train.omega, 10.0);
  EXPECT_EQ(paper.train.l2, 1e-5);
  EXPECT_EQ(RunConfig::defaults(Profile::Desk).train.epochs, 500u);
  EXPECT_EQ(paper.data.fractions, (std::vector<double>{1.0, 0.31, 0.105, 0.04}));
  EXPECT_EQ(paper.arch.gfn_width, 200u);
}

TEST(Config, JsonRoundTripAndSeedFallback) {
  RunConfig c = RunConfig::defaults(Profile::Desk);
  c.seed = 9;
  c.data.family = Family::Bump;
  c.train.mode = TrainMode::Fixed;
  const RunConfig back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.train.seed, 9u);
  EXPECT_EQ(RunConfig::from_json(nlohmann::json::object(), {}, 77).seed, 77u);
  EXPECT_EQ(RunConfig::from_json({{"seed", 3}}, {}, 77).seed, 3u);
  EXPECT_THROW(RunConfig::from_json({{"profile", "huge"}}), InvalidArgument);
  EXPECT_THROW(RunConfig::from_json({{"train", {{"epochs", "many"}}}}), InvalidArgument);
}

TEST(Cli, GenWritesDatasetAndIsRepeatable) {
  const auto a = fresh("gfnrom_cli_gen_a"), b = fresh("gfnrom_cli_gen_b");
  auto r = cli("gen --out " + a.string() + kSmall + " --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(cli("gen --out " + b.string() + kSmall + " --seed 3").code, 0);
  const Dataset ds = load_dataset(a / "dataset");
  EXPECT_EQ(ds.size(), 16u);
  EXPECT_EQ(ds.mesh("large")->size(), 144u);
  EXPECT_EQ(ds.mesh("medium")->size(), 45u);
  for (const auto& e : fs::directory_iterator(a / "dataset"))
    EXPECT_EQ(slurp(e.path()), slurp(b / "dataset" / e.path().filename())) << e.path();
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, TenByTenGrid) {
  const auto a = fresh("gfnrom_cli_grid");
  ASSERT_EQ(cli("gen --out " + a.string() + " --base-side 10 --family smooth --grid 10x10").code, 0);
  EXPECT_EQ(load_dataset(a / "dataset").size(), 100u);
  fs::remove_all(a);
}

TEST(Cli, SeedFromEnvironment) {
  const auto a = fresh("gfnrom_cli_env_a"), b = fresh("gfnrom_cli_env_b");
  ASSERT_EQ(cli("gen --out " + a.string() + kSmall, "GFNROM_SEED=11").code, 0);
  ASSERT_EQ(cli("gen --out " + b.string() + kSmall + " --seed 11").code, 0);
  EXPECT_EQ(read_json(a / "config.json").at("seed"), 11);
  EXPECT_EQ(slurp(a / "dataset" / "mesh_large.csv"), slurp(b / "dataset" / "mesh_large.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, FullPipeline) {
  const auto run = fresh("gfnrom_cli_run");
  fs::create_directories(run);
  write_small_config(run / "in.json");
  const std::string base = " --out " + run.string() + " --config " + (run / "in.json").string();
  auto r = cli("gen" + base);
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli("train" + base);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(run / "model" / "checkpoint.json"));
  EXPECT_EQ(io::read_csv(run / "loss.csv", 1).size(), 21u);
  r = cli("eval" + base + " --eval-mesh large --eval-mesh tiny --with-pod");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ev = read_json(run / "eval_large.json");
  EXPECT_TRUE(ev.contains("pod_error"));
  EXPECT_EQ(ev.at("pod_rank"), 3);
  const std::string csv = slurp(run / "eval_large.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
  EXPECT_EQ(csv.rfind("sample,split,mu1,mu2,error,pod_error\n", 0), 0u);
  EXPECT_TRUE(fs::exists(run / "eval_tiny.json"));
  r = cli("bounds" + base + " --eval-mesh large");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto b = read_json(run / "bounds_large.json");
  EXPECT_TRUE(b.at("pass").get<bool>());
  r = cli("report --out " + run.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string md = slurp(run / "report.md");
  EXPECT_NE(md.find("| large |"), std::string::npos);
  EXPECT_TRUE(fs::exists(run / "error_map_large.svg"));
  EXPECT_TRUE(fs::exists(run / "loss.svg"));
  fs::remove_all(run);
}

TEST(Cli, EvalOnTrainingMeshMatchesInProcessMetric) {
  const auto run = fresh("gfnrom_cli_evalm");
  fs::create_directories(run);
  write_small_config(run / "in.json", R"(, "mode": "fixed")");
  const std::string base = " --out " + run.string() + " --config " + (run / "in.json").string();
  ASSERT_EQ(cli("gen" + base).code, 0);
  ASSERT_EQ(cli("train" + base).code, 0);
  ASSERT_EQ(cli("eval" + base).code, 0);
  const Dataset ds = load_dataset(run / "dataset");
  const RomModel m = load_model(run / "model");
  std::vector<double> per;
  mean_relative_error(m, ds.mus, ds.snapshots.at("large"), ds.mesh("large"), &per);
  EXPECT_EQ(read_json(run / "eval_large.json").at("test_error").get<double>(), mean_over(per, ds.test));
  fs::remove_all(run);
}

TEST(Cli, BoundsOnIdenticalMeshPass) {
  const auto run = fresh("gfnrom_cli_same");
  fs::create_directories(run);
  write_small_config(run / "in.json", R"(, "mode": "fixed")");
  const std::string base = " --out " + run.string() + " --config " + (run / "in.json").string();
  ASSERT_EQ(cli("gen" + base).code, 0);
  ASSERT_EQ(cli("train" + base).code, 0);
  ASSERT_EQ(cli("bounds" + base + " --eval-mesh large").code, 0);
  const auto b = read_json(run / "bounds_large.json");
  EXPECT_EQ(b.at("delta").get<double>(), 0.0);
  EXPECT_TRUE(b.at("pass").get<bool>());
  fs::remove_all(run);
}

TEST(Cli, Errors) {
  const auto run = fresh("gfnrom_cli_err");
  auto r = cli("train --out " + run.string() + " --mode adaptive --optimizer adam");
  EXPECT_TRUE(single_error_line(r)) << r.err;
  EXPECT_NE(r.err.find("adaptive"), std::string::npos);

  r = cli("train --out " + run.string());
  EXPECT_TRUE(single_error_line(r)) << r.err;
  EXPECT_NE(r.err.find("no dataset"), std::string::npos);

  r = cli("report --out " + run.string());
  EXPECT_TRUE(single_error_line(r)) << r.err;
  fs::create_directories(run);
  r = cli("report --out " + run.string());
  EXPECT_TRUE(single_error_line(r)) << r.err;

  r = cli("gen --out " + run.string() + " --family wave");
  EXPECT_TRUE(single_error_line(r)) << r.err;
  r = cli("gen --out " + run.string() + " --grid 10by10");
  EXPECT_TRUE(single_error_line(r)) << r.err;
  r = cli("frobnicate");
  EXPECT_TRUE(single_error_line(r)) << r.err;
  EXPECT_EQ(r.code, 2);
  r = cli("gen --out /proc/gfnrom_cannot_write" + std::string(kSmall));
  EXPECT_TRUE(single_error_line(r)) << r.err;
  fs::remove_all(run);
}

TEST(Cli, CorruptCheckpointIsACleanError) {
  const auto run = fresh("gfnrom_cli_corrupt");
  fs::create_directories(run);
  write_small_config(run / "in.json", R"(, "mode": "fixed")");
  const std::string base = " --out " + run.string() + " --config " + (run / "in.json").string();
  ASSERT_EQ(cli("gen" + base).code, 0);
  ASSERT_EQ(cli("train" + base).code, 0);
  fs::resize_file(run / "model" / "w_enc.bin", 16);
  const auto r = cli("bounds" + base);
  EXPECT_TRUE(single_error_line(r)) << r.err;
  fs::remove_all(run);
}

TEST(Cli, SampleConfigsAreValid) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(GFNROM_SOURCE_DIR) / "configs")) {
    EXPECT_NO_THROW(RunConfig::from_json(read_json(e.path())).validate()) << e.path();
    ++n;
  }
  EXPECT_GE(n, 3u);
}

TEST(Cli, AdaptiveSampleConfigRuns) {
  const auto run = fresh("gfnrom_cli_adaptive");
  const std::string base = " --out " + run.string() + " --config " +
                           (fs::path(GFNROM_SOURCE_DIR) / "configs" / "adaptive_sgd.json").string();
  ASSERT_EQ(cli("gen" + base).code, 0);
  const auto r = cli("train" + base + " --epochs 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_json(run / "train.json");
  EXPECT_EQ(t.at("mode"), "adaptive");
  EXPECT_EQ(t.at("model_nodes"), 400);
  EXPECT_FALSE(t.at("master_sizes").empty());
  fs::remove_all(run);
}
