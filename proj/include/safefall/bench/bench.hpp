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

#ifndef SAFEFALL_BENCH_BENCH_HPP_
#define SAFEFALL_BENCH_BENCH_HPP_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "safefall/model/robot_model.hpp"
#include "safefall/rl/checkpoint.hpp"
#include "safefall/sim/types.hpp"

namespace safefall {

enum class ScenarioKind { kStancePush, kWalkPush, kWalkBreak };

std::string_view to_string(ScenarioKind kind);             // "stance-push", ...
ScenarioKind scenario_from_string(std::string_view name);  // throws ValidationError

enum class ControllerKind { kBaseline, kZtc, kDpc, kOurs };

std::string_view to_string(ControllerKind kind);               // "baseline", "ztc", ...
ControllerKind controller_from_string(std::string_view name);  // throws ValidationError

enum class Metric { kContactForce, kMotionEnergy, kActuationImpulse };
inline constexpr std::array<Metric, 3> kMetrics{Metric::kContactForce, Metric::kMotionEnergy,
                                                Metric::kActuationImpulse};

std::string_view to_string(Metric metric);  // "contact_force", ...

struct BenchScenario {
  ScenarioKind kind = ScenarioKind::kStancePush;
  std::vector<double> magnitudes;  // N
  std::vector<double> directions;  // rad, heading about the vertical axis
  std::vector<std::string> bodies;
  std::vector<double> speeds;       // m/s
  std::vector<std::string> joints;  // broken actuators, left side

  static BenchScenario defaults(ScenarioKind kind);
};

// How headings between the model's in-plane axes are handled.
enum class PlanarPolicy {
  // Run with the push projected onto the plane; skip only perpendicular ones.
  kProject,
  // Run only headings exactly along the plane's axis.
  kInPlaneOnly,
};

struct BenchConfig {
  std::size_t index = 0;
  ScenarioKind kind = ScenarioKind::kStancePush;
  std::optional<double> magnitude;
  std::optional<double> direction;
  std::optional<std::string> body;
  std::optional<double> speed;
  std::optional<std::string> joint;
  bool skipped = false;
  std::string skip_reason;
};

// Full grid in a fixed nested order (magnitude, direction, body for
// stance-push; direction, body, speed for walk-push; joint, speed for
// walk-break). Entries the planar model cannot represent are flagged.
std::vector<BenchConfig> enumerate_configs(const BenchScenario& scenario, const RobotModel& model,
                                           PlanarPolicy policy = PlanarPolicy::kProject);

// Dense (rollout, timestep, object) record of one metric.
struct RolloutTensor {
  Metric metric = Metric::kContactForce;
  std::vector<std::string> objects;
  std::size_t rollouts = 0;
  std::size_t timesteps = 0;
  std::vector<double> values;  // rollout-major, then timestep, then object
  std::vector<bool> valid;     // per rollout

  RolloutTensor() = default;
  RolloutTensor(Metric metric, std::vector<std::string> objects, std::size_t rollouts,
                std::size_t timesteps);
  double& at(std::size_t n, std::size_t t, std::size_t i) {
    return values[(n * timesteps + t) * objects.size() + i];
  }
  double at(std::size_t n, std::size_t t, std::size_t i) const {
    return values[(n * timesteps + t) * objects.size() + i];
  }
  std::size_t valid_count() const;
};

// Per-joint limit-strike sample: qd when within the top 5% of the range and
// moving up, qd when within the bottom 5% and moving down, else 0.
double actuation_impulse_sample(double q, double qd, double lower, double upper);

double motion_energy_sample(double mass, const Eigen::Vector2d& velocity);

struct RolloutSettings {
  // Trigger time windows (s); the trigger is rounded up to a policy step.
  double stance_trigger_min = 0.5;
  double stance_trigger_max = 1.0;
  double walk_trigger_min = 2.0;
  double walk_trigger_max = 2.5;
  double push_duration_min = 0.1;
  double push_duration_max = 0.3;
  double record_seconds = 3.0;
  std::array<int, 3> rollouts{98, 98, 112};  // indexed by ScenarioKind

  bool operator==(const RolloutSettings&) const = default;
};

void validate_rollout_settings(const RolloutSettings& settings);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::kDpc;
  // Fall policy, required for kOurs.
  std::shared_ptr<const Checkpoint> fall_policy;
  // Locomotion policy: required for kBaseline and for every walk scenario.
  std::shared_ptr<const Checkpoint> walk_policy;
};

struct ConfigResult {
  BenchConfig config;
  ControllerKind controller = ControllerKind::kDpc;
  std::array<RolloutTensor, 3> tensors;  // indexed like kMetrics
  // Recorded commanded torques (rollout, timestep, joint); kept for audits.
  RolloutTensor torques;
  std::size_t invalid = 0;
};

// Runs `rollouts` seeded rollouts of one configuration. Rollout n uses
// derive_seed(derive_seed(seed, kSeedBench, config.index), kSeedBench, n).
// Sampling runs at the PD rate, which must be 200 Hz.
ConfigResult run_config(const BenchConfig& config, const ControllerSpec& controller,
                        std::shared_ptr<const RobotModel> model, const SimConfig& sim,
                        const RolloutSettings& settings, std::size_t rollouts,
                        std::uint64_t seed, int workers = 1);

// Mean of the ceil(fraction * n) largest values.
double upper_mean(std::span<const double> values, double fraction = 0.05);

// Upper mean over time for each valid rollout and object (valid x objects).
Eigen::MatrixXd rollout_upper_means(const RolloutTensor& tensor, double fraction = 0.05);

// Mean over valid rollouts and the selected objects (all when empty).
double scalar_summary(const RolloutTensor& tensor, double fraction = 0.05,
                      const std::vector<std::string>& objects = {});

// Per-object mean over valid rollouts of the upper mean over time.
Eigen::VectorXd per_object_summary(const RolloutTensor& tensor, double fraction = 0.05);

// objects x timesteps, mean over valid rollouts.
Eigen::MatrixXd heatmap(const RolloutTensor& tensor);

struct FactorLevel {
  std::string level;
  double value = 0.0;
  std::size_t configs = 0;
};

// Mean of per-config scalars grouped by one factor: "magnitude",
// "direction", "body", "speed" or "joint". Skipped configs are ignored.
// Throws ValidationError on an unknown factor name.
std::vector<FactorLevel> factor_breakdown(const std::vector<BenchConfig>& configs,
                                          const std::vector<double>& scalars,
                                          std::string_view factor);

struct LabeledValues {
  std::vector<std::string> labels;
  std::vector<double> values;
};

// Normalizes both to categorical distributions and returns a - b.
LabeledValues distribution_difference(const LabeledValues& a, const LabeledValues& b);

struct BenchJob {
  std::shared_ptr<const RobotModel> model;
  SimConfig sim;
  std::vector<ScenarioKind> scenarios;
  std::vector<ControllerSpec> controllers;
  RolloutSettings settings;
  PlanarPolicy planar = PlanarPolicy::kProject;
  // Restricts stance-push and walk-push to these magnitudes when non-empty.
  std::vector<double> magnitude_filter;
  double upper_fraction = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir;
  // Written into the manifest verbatim.
  std::string config_json;
};

struct ScenarioSummary {
  ControllerKind controller = ControllerKind::kDpc;
  ScenarioKind scenario = ScenarioKind::kStancePush;
  // Mean over run configs; indexed like kMetrics.
  std::array<double, 3> all_objects{};
  std::array<double, 3> critical{};  // contact and energy only
  std::size_t configs_run = 0;
  std::size_t configs_total = 0;
  std::size_t rollouts_invalid = 0;
};

// Runs every (controller, scenario) pair and writes the result files
// described in the README. Returns the scenario summaries in run order.
std::vector<ScenarioSummary> run_bench(const BenchJob& job);

}  // namespace safefall

#endif  // SAFEFALL_BENCH_BENCH_HPP_
