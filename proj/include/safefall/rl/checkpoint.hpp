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

#ifndef SAFEFALL_RL_CHECKPOINT_HPP_
#define SAFEFALL_RL_CHECKPOINT_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>

#include "safefall/rl/env.hpp"
#include "safefall/rl/network.hpp"
#include "safefall/rl/normalizer.hpp"

namespace safefall {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  // Resolved run configuration the checkpoint was produced with.
  std::string config_json;
  Task task = Task::kFall;
  double action_scale = 0.5;
  PolicyShape shape;
  Eigen::VectorXd params;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::int64_t adam_t = 0;
  bool normalize_observations = false;
  RunningNormalizer observation_normalizer;
  bool normalize_rewards = false;
  RunningNormalizer return_normalizer;
  std::int64_t global_step = 0;
  std::int64_t iteration = 0;
  double progress = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const Checkpoint&) const = default;
};

// Writes to a sibling temporary file, then renames over `path`.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws ParseError on a bad magic, version or truncated file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Deterministic controller from a checkpoint: PD targets for the policy mean.
class PolicyController {
 public:
  PolicyController(const Checkpoint& checkpoint, std::shared_ptr<const RobotModel> model);

  Task task() const { return task_; }
  // Clears the observation history; the next call pads it.
  void reset();
  // `extra` carries task channels (the locomotion speed command).
  Eigen::VectorXd targets(const SimState& state,
                          const Eigen::VectorXd& extra = Eigen::VectorXd());

 private:
  std::shared_ptr<const RobotModel> model_;
  Task task_;
  double action_scale_;
  ActorCritic policy_;
  bool normalize_;
  RunningNormalizer normalizer_;
  ObservationBuilder builder_;
  Eigen::VectorXd q0_;
  Eigen::VectorXd a_prev_;
};

}  // namespace safefall

#endif  // SAFEFALL_RL_CHECKPOINT_HPP_
