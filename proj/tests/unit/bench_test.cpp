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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <set>

#include "oracles.hpp"
#include "safefall/bench/bench.hpp"
#include "safefall/error.hpp"

namespace safefall {
namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

std::shared_ptr<const RobotModel> load(const char* file) {
  return std::make_shared<const RobotModel>(
      load_model_file(std::string(SAFEFALL_MODELS_DIR) + "/" + file));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

TEST(Grid, Cardinalities) {
  const auto model = load("sagittal.json");
  EXPECT_EQ(enumerate_configs(BenchScenario::defaults(ScenarioKind::kStancePush), *model).size(),
            72u);
  EXPECT_EQ(enumerate_configs(BenchScenario::defaults(ScenarioKind::kWalkPush), *model).size(),
            72u);
  EXPECT_EQ(enumerate_configs(BenchScenario::defaults(ScenarioKind::kWalkBreak), *model).size(),
            18u);
}

TEST(Grid, WalkBreakFactors) {
  const auto model = load("sagittal.json");
  const auto configs =
      enumerate_configs(BenchScenario::defaults(ScenarioKind::kWalkBreak), *model);
  std::set<std::string> joints;
  std::set<double> speeds;
  int run = 0;
  for (const auto& c : configs) {
    joints.insert(*c.joint);
    speeds.insert(*c.speed);
    if (!c.skipped) ++run;
  }
  EXPECT_EQ(joints, (std::set<std::string>{"ankle_roll", "ankle_pitch", "knee", "hip_roll",
                                           "hip_pitch", "hip_yaw"}));
  EXPECT_EQ(speeds, (std::set<double>{0.15, 0.4, 0.75}));
  EXPECT_EQ(run, 9);  // pitch-axis joints only
}

TEST(Grid, PlanarSkipFlags) {
  const auto sag = load("sagittal.json");
  const auto front = load("frontal.json");
  const auto s = BenchScenario::defaults(ScenarioKind::kStancePush);
  auto count = [](const std::vector<BenchConfig>& v) {
    return std::count_if(v.begin(), v.end(), [](const BenchConfig& c) { return !c.skipped; });
  };
  EXPECT_EQ(count(enumerate_configs(s, *sag, PlanarPolicy::kProject)), 3 * 6 * 3);
  EXPECT_EQ(count(enumerate_configs(s, *sag, PlanarPolicy::kInPlaneOnly)), 3 * 2 * 3);
  const auto f = enumerate_configs(s, *front, PlanarPolicy::kInPlaneOnly);
  EXPECT_EQ(count(f), 3 * 2 * 3);
  for (const auto& c : f) {
    if (!c.skipped) {
      EXPECT_TRUE(std::abs(*c.direction - kPi / 2) < 1e-12 ||
                  std::abs(*c.direction - 3 * kPi / 2) < 1e-12);
    }
  }
  for (const auto& c : enumerate_configs(BenchScenario::defaults(ScenarioKind::kWalkPush), *front)) {
    EXPECT_TRUE(c.skipped);
  }
}

TEST(Grid, OrderingIsStable) {
  const auto model = load("sagittal.json");
  const auto s = BenchScenario::defaults(ScenarioKind::kWalkPush);
  const auto a = enumerate_configs(s, *model), b = enumerate_configs(s, *model);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].index, i);
    EXPECT_EQ(a[i].direction, b[i].direction);
    EXPECT_EQ(a[i].body, b[i].body);
    EXPECT_EQ(a[i].speed, b[i].speed);
  }
}

TEST(Metrics, ImpulseHandExample) {
  // q = q_min + 0.96 range
  EXPECT_DOUBLE_EQ(actuation_impulse_sample(-1.0 + 0.96 * 2.0, 0.3, -1.0, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(actuation_impulse_sample(-1.0 + 0.96 * 2.0, -0.3, -1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(actuation_impulse_sample(-1.0 + 0.02 * 2.0, -0.3, -1.0, 1.0), -0.3);
  EXPECT_DOUBLE_EQ(actuation_impulse_sample(0.0, 5.0, -1.0, 1.0), 0.0);
}

TEST(Metrics, EnergyHandExample) {
  EXPECT_DOUBLE_EQ(motion_energy_sample(4.0, Eigen::Vector2d(1.5, 0.0)), 4.5);
  EXPECT_DOUBLE_EQ(motion_energy_sample(4.0, Eigen::Vector2d(0.9, 1.2)), 4.5);
}

TEST(Metrics, MatchOraclesOnRandomInputs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double lo = -2.0 + u(rng), hi = 2.0 + u(rng);
    const double q = lo + (hi - lo) * (0.5 + 0.55 * u(rng));
    const double qd = 4.0 * u(rng);
    EXPECT_EQ(actuation_impulse_sample(q, qd, lo, hi), oracle::bench_impulse(q, qd, lo, hi));
    const double m = 5.0 * (1.0 + u(rng));
    const Eigen::Vector2d v(3.0 * u(rng), 3.0 * u(rng));
    const double e = motion_energy_sample(m, v), want = oracle::kinetic(m, v.x(), v.y());
    EXPECT_LE(std::abs(e - want), 1e-12 * want);
  }
}

TEST(UpperMean, Examples) {
  const std::vector<double> sevens(37, 7.0);
  EXPECT_DOUBLE_EQ(upper_mean(sevens, 0.05), 7.0);
  EXPECT_DOUBLE_EQ(upper_mean(sevens, 0.9), 7.0);
  std::vector<double> seq;
  for (int i = 1; i <= 100; ++i) seq.push_back(i);
  EXPECT_DOUBLE_EQ(upper_mean(seq), 98.0);
  EXPECT_DOUBLE_EQ(upper_mean(std::vector<double>{42.0}), 42.0);
  EXPECT_THROW(upper_mean(std::vector<double>{}), ContractViolation);
  EXPECT_THROW(upper_mean(seq, 0.0), ContractViolation);
}

TEST(UpperMean, MatchesSortOracleExactly) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(1, 10000);
  std::normal_distribution<double> g(0.0, 100.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (double& x : v) x = g(rng);
    EXPECT_EQ(upper_mean(v, 0.05), oracle::top_fraction_mean(v, 1, 20));
  }
}

RolloutTensor random_tensor(std::mt19937_64& rng, std::size_t n, std::size_t t, std::size_t i) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < i; ++k) names.push_back("o" + std::to_string(k));
  RolloutTensor x(Metric::kMotionEnergy, names, n, t);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (double& v : x.values) v = u(rng);
  return x;
}

TEST(Aggregate, ScalarMatchesLoopOracle) {
  std::mt19937_64 rng(3);
  const RolloutTensor x = random_tensor(rng, 5, 20, 4);
  double sum = 0.0;
  for (std::size_t n = 0; n < 5; ++n) {
    for (std::size_t i = 0; i < 4; ++i) {
      oracle::Vec series;
      for (std::size_t t = 0; t < 20; ++t) series.push_back(x.at(n, t, i));
      sum += oracle::top_fraction_mean(series, 1, 20);
    }
  }
  EXPECT_NEAR(scalar_summary(x), sum / 20.0, 1e-12);
  // Subset of objects.
  double sub = 0.0;
  for (std::size_t n = 0; n < 5; ++n) {
    oracle::Vec series;
    for (std::size_t t = 0; t < 20; ++t) series.push_back(x.at(n, t, 2));
    sub += oracle::top_fraction_mean(series, 1, 20);
  }
  EXPECT_NEAR(scalar_summary(x, 0.05, {"o2"}), sub / 5.0, 1e-12);
  EXPECT_THROW(scalar_summary(x, 0.05, {"nope"}), ValidationError);
}

TEST(Aggregate, ZerosAndSingleCell) {
  RolloutTensor x(Metric::kContactForce, {"a", "b", "c"}, 4, 6);
  EXPECT_EQ(scalar_summary(x), 0.0);
  EXPECT_EQ(heatmap(x).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(per_object_summary(x).cwiseAbs().maxCoeff(), 0.0);
  x.at(2, 3, 1) = 8.0;
  const Eigen::MatrixXd h = heatmap(x);
  EXPECT_DOUBLE_EQ(h(1, 3), 2.0);
  EXPECT_DOUBLE_EQ(h.sum(), 2.0);
}

TEST(Aggregate, InvalidRolloutsExcluded) {
  std::mt19937_64 rng(4);
  RolloutTensor x = random_tensor(rng, 3, 10, 2);
  RolloutTensor y = x;
  y.valid[1] = false;
  for (std::size_t t = 0; t < 10; ++t) y.at(1, t, 0) = 1e9;
  EXPECT_EQ(rollout_upper_means(y).rows(), 2);
  const Eigen::MatrixXd hy = heatmap(y);
  EXPECT_NEAR(hy(1, 0), (x.at(0, 0, 1) + x.at(2, 0, 1)) / 2.0, 1e-12);
  EXPECT_LT(hy.maxCoeff(), 11.0);
}

TEST(Aggregate, FactorBreakdown) {
  const auto model = load("sagittal.json");
  const auto configs =
      enumerate_configs(BenchScenario::defaults(ScenarioKind::kStancePush), *model,
                        PlanarPolicy::kInPlaneOnly);
  std::vector<double> scalars;
  for (const auto& c : configs) scalars.push_back(c.skipped ? std::nan("") : *c.magnitude);
  const auto by_mag = factor_breakdown(configs, scalars, "magnitude");
  ASSERT_EQ(by_mag.size(), 3u);
  for (const auto& f : by_mag) {
    EXPECT_DOUBLE_EQ(f.value, std::stod(f.level));
    EXPECT_EQ(f.configs, 6u);
  }
  EXPECT_EQ(factor_breakdown(configs, scalars, "body").size(), 3u);
  EXPECT_TRUE(factor_breakdown(configs, scalars, "joint").empty());
  EXPECT_THROW(factor_breakdown(configs, scalars, "colour"), ValidationError);
}

TEST(DistDiff, Examples) {
  const LabeledValues a{{"x", "y"}, {3.0, 1.0}}, b{{"x", "y"}, {1.0, 3.0}};
  const LabeledValues d = distribution_difference(a, b);
  EXPECT_DOUBLE_EQ(d.values[0], 0.5);
  EXPECT_DOUBLE_EQ(d.values[1], -0.5);
  const LabeledValues same = distribution_difference(a, a);
  EXPECT_EQ(same.values, (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(distribution_difference(a, LabeledValues{{"x", "z"}, {1.0, 1.0}}),
               ContractViolation);
  EXPECT_THROW(distribution_difference(a, LabeledValues{{"x", "y"}, {0.0, 0.0}}),
               ContractViolation);
}

TEST(DistDiff, SumsToZero) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int k = 0; k < 200; ++k) {
    LabeledValues a, b;
    for (int i = 0; i < 15; ++i) {
      a.labels.push_back(std::to_string(i));
      a.values.push_back(u(rng));
      b.values.push_back(u(rng));
    }
    b.labels = a.labels;
    double s = 0.0;
    for (double v : distribution_difference(a, b).values) s += v;
    EXPECT_LE(std::abs(s), 1e-12);
  }
}

BenchConfig stance_config(const RobotModel& model, double direction) {
  for (const auto& c : enumerate_configs(BenchScenario::defaults(ScenarioKind::kStancePush), model)) {
    if (*c.magnitude == 350.0 && *c.body == "torso" && std::abs(*c.direction - direction) < 1e-12) {
      return c;
    }
  }
  throw std::runtime_error("config not found");
}

TEST(RunConfig, ZeroTorqueAfterTrigger) {
  const auto model = load("sagittal.json");
  RolloutSettings settings;
  settings.record_seconds = 1.0;
  const ConfigResult r = run_config(stance_config(*model, kPi), ControllerSpec{ControllerKind::kZtc},
                                    model, SimConfig{}, settings, 3, 1);
  EXPECT_EQ(r.invalid, 0u);
  EXPECT_EQ(r.torques.timesteps, 200u);
  for (double t : r.torques.values) EXPECT_EQ(t, 0.0);
  for (const auto& t : r.tensors) {
    for (double v : t.values) EXPECT_TRUE(std::isfinite(v));
  }
  for (double v : r.tensors[0].values) EXPECT_GE(v, 0.0);
  for (double v : r.tensors[1].values) EXPECT_GE(v, 0.0);
}

TEST(RunConfig, PushedRobotFallsAndHitsCriticalBody) {
  const auto model = load("sagittal.json");
  RolloutSettings settings;
  const ConfigResult r = run_config(stance_config(*model, 0.0), ControllerSpec{ControllerKind::kDpc},
                                    model, SimConfig{}, settings, 2, 3);
  EXPECT_GT(scalar_summary(r.tensors[0], 0.05, model->critical_bodies), 50.0);
  double torque = 0.0;
  for (double t : r.torques.values) torque += std::abs(t);
  EXPECT_GT(torque, 0.0);
}

TEST(RunConfig, ReproducibleAndWorkerIndependent) {
  const auto model = load("sagittal.json");
  RolloutSettings settings;
  settings.record_seconds = 0.5;
  const BenchConfig c = stance_config(*model, 0.0);
  const ConfigResult a = run_config(c, ControllerSpec{ControllerKind::kDpc}, model, SimConfig{},
                                    settings, 4, 9, 1);
  const ConfigResult b = run_config(c, ControllerSpec{ControllerKind::kDpc}, model, SimConfig{},
                                    settings, 4, 9, 3);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(a.tensors[m].values, b.tensors[m].values);
  const ConfigResult other = run_config(c, ControllerSpec{ControllerKind::kDpc}, model,
                                        SimConfig{}, settings, 4, 10, 1);
  EXPECT_NE(a.tensors[1].values, other.tensors[1].values);
}

TEST(RunConfig, RequiresCheckpoints) {
  const auto model = load("sagittal.json");
  const BenchConfig c = stance_config(*model, 0.0);
  EXPECT_THROW(run_config(c, ControllerSpec{ControllerKind::kOurs}, model, SimConfig{},
                          RolloutSettings{}, 1, 1),
               ValidationError);
  EXPECT_THROW(run_config(c, ControllerSpec{ControllerKind::kBaseline}, model, SimConfig{},
                          RolloutSettings{}, 1, 1),
               ValidationError);
  auto walk = enumerate_configs(BenchScenario::defaults(ScenarioKind::kWalkBreak), *model);
  EXPECT_THROW(run_config(walk[3], ControllerSpec{ControllerKind::kDpc}, model, SimConfig{},
                          RolloutSettings{}, 1, 1),
               ValidationError);
  auto skipped = c;
  skipped.skipped = true;
  EXPECT_THROW(run_config(skipped, ControllerSpec{ControllerKind::kDpc}, model, SimConfig{},
                          RolloutSettings{}, 1, 1),
               ContractViolation);
}

TEST(RunBench, WritesByteIdenticalResults) {
  const auto model = load("sagittal.json");
  auto run = [&](const fs::path& dir, int workers) {
    fs::remove_all(dir);
    BenchJob job;
    job.model = model;
    job.scenarios = {ScenarioKind::kStancePush};
    job.controllers = {ControllerSpec{ControllerKind::kZtc}, ControllerSpec{ControllerKind::kDpc}};
    job.settings.rollouts = {2, 1, 1};
    job.settings.record_seconds = 0.5;
    job.planar = PlanarPolicy::kInPlaneOnly;
    job.magnitude_filter = {350.0};
    job.seed = 5;
    job.workers = workers;
    job.out_dir = dir;
    return run_bench(job);
  };
  const fs::path a = fs::temp_directory_path() / "safefall_bench_a";
  const fs::path b = fs::temp_directory_path() / "safefall_bench_b";
  const auto s = run(a, 1);
  run(b, 2);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].configs_total, 72u);
  EXPECT_EQ(s[0].configs_run, 6u);
  for (const char* f : {"manifest.json", "summary.csv", "configs.csv", "per_object.csv",
                        "per_factor.csv", "heatmaps/ztc_stance-push_contact_force.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Names, RoundTrip) {
  for (auto k : {ScenarioKind::kStancePush, ScenarioKind::kWalkPush, ScenarioKind::kWalkBreak}) {
    EXPECT_EQ(scenario_from_string(to_string(k)), k);
  }
  for (auto k : {ControllerKind::kBaseline, ControllerKind::kZtc, ControllerKind::kDpc,
                 ControllerKind::kOurs}) {
    EXPECT_EQ(controller_from_string(to_string(k)), k);
  }
  EXPECT_THROW(controller_from_string("pid"), ValidationError);
}

}  // namespace
}  // namespace safefall
