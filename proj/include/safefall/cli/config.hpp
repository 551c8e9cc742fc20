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

#ifndef SAFEFALL_CLI_CONFIG_HPP_
#define SAFEFALL_CLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "safefall/bench/bench.hpp"
#include "safefall/curriculum/curriculum.hpp"
#include "safefall/reward/reward.hpp"
#include "safefall/rl/env.hpp"
#include "safefall/rl/ppo.hpp"
#include "safefall/sim/types.hpp"

namespace safefall {

struct TrainSettings {
  int checkpoint_every = 10;
  int eval_every = 0;
  int eval_episodes = 10;
  std::optional<double> stop_at_return;

  bool operator==(const TrainSettings&) const = default;
};

struct BenchSettings {
  std::vector<ScenarioKind> scenarios{ScenarioKind::kStancePush, ScenarioKind::kWalkPush,
                                      ScenarioKind::kWalkBreak};
  std::vector<ControllerKind> controllers{ControllerKind::kZtc, ControllerKind::kDpc};
  std::string fall_checkpoint;
  std::string walk_checkpoint;
  PlanarPolicy planar = PlanarPolicy::kProject;
  std::vector<double> magnitudes;  // empty = all
  double upper_fraction = 0.05;
  RolloutSettings rollout;

  bool operator==(const BenchSettings&) const = default;
};

// Front and back fall recordings for offline inspection.
struct EvalSettings {
  double magnitude = 350.0;
  std::string body = "torso";
  double push_start = 0.5;
  double push_duration = 0.2;
  double seconds = 4.0;

  bool operator==(const EvalSettings&) const = default;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  // Relative paths resolve against the output root (see resolve_output_dir).
  std::string output_dir = "runs/default";
  std::string model;
  // Optional cross-check of the model's plane ("" accepts either).
  std::string plane;
  SimConfig sim;
  TaskSettings task;
  RewardVariant reward_variant = RewardVariant::kCorrected;
  RewardWeights weights;
  CurriculumSchedule curriculum;
  PPOConfig ppo;
  TrainSettings train;
  BenchSettings bench;
  EvalSettings eval;

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& config);

// Strict: unknown keys and wrong types raise ValidationError naming the key.
// Relative model and checkpoint paths resolve against base_dir.
RunConfig run_config_from_json(const nlohmann::json& document,
                               const std::filesystem::path& base_dir);

// Sets a dotted key (e.g. "ppo.num_envs=64"). The value is parsed as JSON
// when possible and taken as a string otherwise.
void apply_override(nlohmann::json& document, const std::string& assignment);

// Reads the file (if any), applies overrides and parses.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides);

// Checks every section and loads the model; nothing is written.
// Throws ValidationError or ParseError.
void validate_run_config(const RunConfig& config);

// `config.output_dir` under $SAFEFALL_OUTPUT_ROOT (or the working directory)
// when relative.
std::filesystem::path resolve_output_dir(const RunConfig& config);

}  // namespace safefall

#endif  // SAFEFALL_CLI_CONFIG_HPP_
