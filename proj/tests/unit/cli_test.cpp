// Copyright 2026 The safefall Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "safefall/cli/commands.hpp"

namespace safefall {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config(const std::string& name) {
  return std::string(SAFEFALL_CONFIGS_DIR) + "/" + name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("safefall_cli_" + std::string(::testing::UnitTest::GetInstance()
                                               ->current_test_info()
                                               ->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    ::setenv("SAFEFALL_OUTPUT_ROOT", root_.c_str(), 1);
  }
  void TearDown() override {
    ::unsetenv("SAFEFALL_OUTPUT_ROOT");
    fs::remove_all(root_);
  }
  fs::path root_;
};

TEST_F(CliTest, MissingModelNamesPath) {
  const CliRun r = cli({"train", "-c", config("smoke.json"), "--set", "model=/nope/robot.json"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("/nope/robot.json"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(root_ / "runs"));
}

TEST_F(CliTest, UnknownKeyAndBadTypeAreValidationErrors) {
  CliRun r = cli({"print-config", "--set", "ppo.num_env=3"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("ppo.num_env"), std::string::npos) << r.err;
  r = cli({"print-config", "--set", "ppo.num_envs=\"many\""});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("ppo.num_envs"), std::string::npos) << r.err;
  r = cli({"train", "--set", "model=" + std::string(SAFEFALL_MODELS_DIR) + "/sagittal.json"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("seed"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"frobnicate"}).code, kExitValidation);
}

TEST_F(CliTest, InvalidValueFailsBeforeOutput) {
  const CliRun r = cli({"train", "-c", config("smoke.json"), "--set", "ppo.clip=-1"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("clip"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(root_ / "runs"));
}

TEST_F(CliTest, PrintConfigAppliesOverrides) {
  const CliRun r = cli({"print-config", "-c", config("smoke.json"), "--set", "ppo.num_envs=7",
                     "--set", "reward.variant=as_written"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["ppo"]["num_envs"], 7);
  EXPECT_EQ(doc["ppo"]["total_steps"], 2000);
  EXPECT_EQ(doc["reward"]["variant"], "as_written");
  EXPECT_EQ(doc["seed"], 1);
}

TEST_F(CliTest, SmokeTrainWritesCheckpointAndSnapshotReproduces) {
  CliRun r = cli({"train", "-c", config("smoke.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const fs::path dir = root_ / "runs/smoke/train";
  ASSERT_TRUE(fs::exists(dir / "checkpoints/latest.ckpt"));
  ASSERT_TRUE(fs::exists(dir / "metrics.ndjson"));
  const std::string ckpt = slurp(dir / "checkpoints/latest.ckpt");
  const std::string metrics = slurp(dir / "metrics.ndjson");
  const fs::path snapshot = root_ / "snapshot.json";
  fs::copy_file(dir / "config.json", snapshot);
  r = cli({"train", "-c", snapshot.string(), "--workers", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "checkpoints/latest.ckpt"), ckpt);
  EXPECT_EQ(slurp(dir / "metrics.ndjson"), metrics);
}

TEST_F(CliTest, ResumeContinuesProgress) {
  ASSERT_EQ(cli({"train", "-c", config("smoke.json")}).code, kExitOk);
  const fs::path first = root_ / "first.ckpt";
  fs::copy_file(root_ / "runs/smoke/train/checkpoints/latest.ckpt", first);
  const CliRun r = cli({"train", "-c", config("smoke.json"), "--set", "ppo.total_steps=4000",
                     "--resume", first.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream in(root_ / "runs/smoke/train/metrics.ndjson");
  std::string line, last;
  while (std::getline(in, line)) last = line;
  const auto rec = nlohmann::json::parse(last);
  EXPECT_EQ(rec["step"], 4000);
  EXPECT_EQ(rec["iteration"], 10);
  // Progress is recorded as of the start of the iteration's rollout.
  EXPECT_DOUBLE_EQ(rec["progress"].get<double>(), 3600.0 / 4000.0);
}

TEST_F(CliTest, ResumeFromMissingCheckpointFails) {
  const CliRun r = cli({"train", "-c", config("smoke.json"), "--resume", "/nope/x.ckpt"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("/nope/x.ckpt"), std::string::npos);
}

TEST_F(CliTest, BenchNeedsCheckpointForLearnedControllers) {
  CliRun r = cli({"bench", "-c", config("smoke.json"), "--controller", "ours"});
  EXPECT_EQ(r.code, kExitValidation);
  r = cli({"bench", "-c", config("smoke.json"), "--controller", "baseline"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_FALSE(fs::exists(root_ / "runs"));
}

TEST_F(CliTest, BenchZtcManifestListsWholeGrid) {
  const CliRun r = cli({"bench", "-c", config("smoke.json"), "--scenario", "stance-push",
                     "--controller", "ztc", "--set", "bench.magnitudes=[]"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto manifest =
      nlohmann::json::parse(slurp(root_ / "runs/smoke/bench/manifest.json"));
  ASSERT_EQ(manifest["runs"].size(), 1u);
  const auto& configs = manifest["runs"][0]["configs"];
  EXPECT_EQ(configs.size(), 72u);
  std::size_t run = 0;
  for (const auto& c : configs) run += c["skipped"].get<bool>() ? 0 : 1;
  EXPECT_EQ(run, 18u);
}

TEST_F(CliTest, BenchRerunIsByteIdenticalAndExportViews) {
  const std::vector<std::string> args{"bench", "-c", config("smoke.json")};
  ASSERT_EQ(cli(args).code, kExitOk);
  const fs::path dir = root_ / "runs/smoke/bench";
  std::map<std::string, std::string> first;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) first[e.path().string()] = slurp(e.path());
  }
  ASSERT_EQ(cli(args).code, kExitOk);
  for (const auto& [path, bytes] : first) EXPECT_EQ(slurp(path), bytes) << path;

  CliRun r = cli({"export", "--results", dir.string(), "--view", "summary"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // Per controller: contact and energy over all and critical bodies, impulse over all joints.
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 2 * 5);

  r = cli({"export", "--results", dir.string(), "--view", "heatmap"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto maps = nlohmann::json::parse(r.out);
  ASSERT_EQ(maps.size(), 6u);
  for (const auto& m : maps) {
    EXPECT_EQ(m["values"].size(), m["objects"].size());
    EXPECT_EQ(m["values"][0].size(), 100u);  // 0.5 s at 200 Hz
  }

  r = cli({"export", "--results", dir.string(), "--view", "distdiff", "--a", "ztc", "--b",
           "dpc"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::map<std::string, double> sums;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1), c = line.find(',', b + 1);
    sums[line.substr(0, b)] += std::stod(line.substr(c + 1));
  }
  EXPECT_EQ(sums.size(), 3u);
  for (const auto& [key, s] : sums) EXPECT_NEAR(s, 0.0, 1e-12) << key;

  EXPECT_EQ(cli({"export", "--results", (root_ / "none").string()}).code, kExitValidation);
  EXPECT_EQ(cli({"export", "--results", dir.string(), "--view", "distdiff", "--a", "ours"}).code,
            kExitValidation);
}

TEST_F(CliTest, EvalDumpsFrontAndBackTraces) {
  const CliRun r = cli({"eval", "-c", config("smoke.json"), "--controller", "dpc",
                     "--set", "eval.seconds=1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* name : {"dpc_front.csv", "dpc_back.csv"}) {
    const fs::path p = root_ / "runs/smoke/eval" / name;
    ASSERT_TRUE(fs::exists(p));
    const std::string text = slurp(p);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 51);
    EXPECT_EQ(text.rfind("time,push_active,root_x,root_z,root_pitch,q_", 0), 0u);
  }
  EXPECT_EQ(cli({"eval", "-c", config("smoke.json")}).code, kExitValidation);
}

}  // namespace
}  // namespace safefall
