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

#ifndef SAFEFALL_RL_ENV_HPP_
#define SAFEFALL_RL_ENV_HPP_

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "safefall/curriculum/curriculum.hpp"
#include "safefall/model/robot_model.hpp"
#include "safefall/reward/reward.hpp"
#include "safefall/rl/observation.hpp"
#include "safefall/sim/simulator.hpp"

namespace safefall {

enum class Task {
  kFall,
  // Stance and forward walking with a speed command; source of the
  // benchmark's baseline controller.
  kLocomotion,
  kPendulum,
};

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);  // throws ValidationError

struct TaskSettings {
  Task task = Task::kFall;
  // PD target = q0 + action_scale * action.
  double action_scale = 0.5;
  int episode_steps = 200;
  // Locomotion: share of stance episodes and the walking speed range.
  double stance_fraction = 0.3;
  double min_speed = 0.1;
  double max_speed = 0.8;
  // Locomotion: probability and peak magnitude of a light disturbance push.
  double disturbance_probability = 0.5;
  double disturbance_max = 150.0;
  // Pendulum: initial angle drawn from U(-initial_angle, initial_angle).
  double initial_angle = 1.0;

  bool operator==(const TaskSettings&) const = default;
};

void validate_task_settings(const TaskSettings& settings);

// Observation channels appended after the history (locomotion speed command).
int extra_observation_size(Task task);

// Builds the history observation and appends task channels.
class ObservationBuilder {
 public:
  ObservationBuilder(std::shared_ptr<const RobotModel> model, int extra);

  int size() const { return observation_size(static_cast<int>(model_->dof())) + extra_; }
  void reset() { history_.clear(); }
  Eigen::VectorXd observe(const SimState& state, const Eigen::VectorXd& a_prev,
                          const Eigen::VectorXd& extra);

 private:
  std::shared_ptr<const RobotModel> model_;
  std::size_t reference_;
  int extra_;
  ObservationHistory history_;
};

// Reward inputs for a humanoid after one policy step.
RewardInputs make_reward_inputs(const RobotModel& model, const SimState& state,
                                const Eigen::VectorXd& qd_prev, const Eigen::VectorXd& tau,
                                const Eigen::VectorXd& a_t, const Eigen::VectorXd& a_prev);

struct EnvStep {
  Eigen::VectorXd observation;
  double reward = 0.0;
  RewardBreakdown breakdown;
  bool done = false;
  // done because the horizon ran out, not because of a terminal state.
  bool truncated = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual int observation_size() const = 0;
  virtual int action_size() const = 0;
  virtual Eigen::VectorXd reset(std::mt19937_64& rng) = 0;
  virtual EnvStep step(const Eigen::VectorXd& action) = 0;
  virtual void set_progress(double /*p*/) {}
  virtual const SimState& state() const = 0;
};

struct EnvSpec {
  std::shared_ptr<const RobotModel> model;
  SimConfig sim;
  TaskSettings task;
  RewardWeights weights;
  RewardVariant variant = RewardVariant::kCorrected;
  CurriculumSchedule schedule;
};

std::unique_ptr<Env> make_env(const EnvSpec& spec);

// Falling task: curriculum-sampled initial state, push or actuator failure,
// reward table as the only signal, fixed horizon without early termination.
class FallEnv : public Env {
 public:
  explicit FallEnv(const EnvSpec& spec);
  int observation_size() const override { return builder_.size(); }
  int action_size() const override { return static_cast<int>(spec_.model->dof()); }
  Eigen::VectorXd reset(std::mt19937_64& rng) override;
  EnvStep step(const Eigen::VectorXd& action) override;
  void set_progress(double p) override { progress_ = p; }
  const SimState& state() const override { return state_; }
  const EpisodeSetup& setup() const { return setup_; }

 private:
  EnvSpec spec_;
  Simulator sim_;
  ObservationBuilder builder_;
  Eigen::VectorXd q0_;
  SimState state_;
  EpisodeSetup setup_;
  std::vector<PushEvent> pushes_;
  std::optional<std::size_t> failed_;
  Eigen::VectorXd a_prev_;
  double progress_ = 0.0;
  int steps_ = 0;
};

class LocomotionEnv : public Env {
 public:
  explicit LocomotionEnv(const EnvSpec& spec);
  int observation_size() const override { return builder_.size(); }
  int action_size() const override { return static_cast<int>(spec_.model->dof()); }
  Eigen::VectorXd reset(std::mt19937_64& rng) override;
  EnvStep step(const Eigen::VectorXd& action) override;
  const SimState& state() const override { return state_; }
  double command() const { return command_; }

 private:
  EnvSpec spec_;
  Simulator sim_;
  ObservationBuilder builder_;
  Eigen::VectorXd q0_;
  SimState state_;
  std::vector<PushEvent> pushes_;
  Eigen::VectorXd a_prev_;
  double command_ = 0.0;
  double standing_height_ = 0.0;
  int steps_ = 0;
};

class PendulumEnv : public Env {
 public:
  explicit PendulumEnv(const EnvSpec& spec);
  int observation_size() const override { return builder_.size(); }
  int action_size() const override { return static_cast<int>(spec_.model->dof()); }
  Eigen::VectorXd reset(std::mt19937_64& rng) override;
  EnvStep step(const Eigen::VectorXd& action) override;
  const SimState& state() const override { return state_; }

 private:
  EnvSpec spec_;
  Simulator sim_;
  ObservationBuilder builder_;
  Eigen::VectorXd q0_;
  SimState state_;
  Eigen::VectorXd a_prev_;
  int steps_ = 0;
};

}  // namespace safefall

#endif  // SAFEFALL_RL_ENV_HPP_
