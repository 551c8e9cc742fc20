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

#include "safefall/rl/env.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "safefall/error.hpp"

namespace safefall {

namespace {

constexpr double kAliveBonus = 1.0;
constexpr double kTrackingWeight = 1.0;
constexpr double kTrackingWidth = 0.04;  // (m/s)^2
constexpr double kUprightWeight = 0.5;
constexpr double kUprightWidth = 0.05;  // rad^2
constexpr double kFallenTorsoAngle = 0.8;
constexpr double kFallenHeightRatio = 0.6;

std::vector<double> as_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd targets_from(const Eigen::VectorXd& q0, double scale,
                             const Eigen::VectorXd& action) {
  require_size(static_cast<std::size_t>(action.size()),
               static_cast<std::size_t>(q0.size()), "env action");
  return q0 + scale * action;
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kFall: return "fall";
    case Task::kLocomotion: return "locomotion";
    case Task::kPendulum: return "pendulum";
  }
  return "fall";
}

Task task_from_string(std::string_view name) {
  if (name == "fall") return Task::kFall;
  if (name == "locomotion") return Task::kLocomotion;
  if (name == "pendulum") return Task::kPendulum;
  throw ValidationError("unknown task '" + std::string(name) +
                        "' (expected fall, locomotion or pendulum)");
}

void validate_task_settings(const TaskSettings& s) {
  if (!(s.action_scale > 0.0)) throw ValidationError("task.action_scale must be > 0");
  if (s.episode_steps <= 0) throw ValidationError("task.episode_steps must be > 0");
  if (!(s.stance_fraction >= 0.0 && s.stance_fraction <= 1.0)) {
    throw ValidationError("task.stance_fraction must be in [0, 1]");
  }
  if (!(s.min_speed >= 0.0 && s.min_speed <= s.max_speed)) {
    throw ValidationError("task: requires 0 <= min_speed <= max_speed");
  }
  if (!(s.disturbance_probability >= 0.0 && s.disturbance_probability <= 1.0)) {
    throw ValidationError("task.disturbance_probability must be in [0, 1]");
  }
  if (!(s.disturbance_max >= 0.0)) throw ValidationError("task.disturbance_max must be >= 0");
  if (!(s.initial_angle >= 0.0)) throw ValidationError("task.initial_angle must be >= 0");
}

int extra_observation_size(Task task) { return task == Task::kLocomotion ? 1 : 0; }

ObservationBuilder::ObservationBuilder(std::shared_ptr<const RobotModel> model, int extra)
    : model_(std::move(model)),
      reference_(reference_body(*model_)),
      extra_(extra),
      history_(FrameLayout{static_cast<int>(model_->dof())}.size()) {}

Eigen::VectorXd ObservationBuilder::observe(const SimState& state,
                                            const Eigen::VectorXd& a_prev,
                                            const Eigen::VectorXd& extra) {
  require_size(static_cast<std::size_t>(extra.size()), static_cast<std::size_t>(extra_),
               "observation extra channels");
  history_.push(make_frame(state, a_prev, *model_, reference_));
  Eigen::VectorXd out(size());
  out << history_.flatten(), extra;
  return out;
}

RewardInputs make_reward_inputs(const RobotModel& model, const SimState& state,
                                const Eigen::VectorXd& qd_prev, const Eigen::VectorXd& tau,
                                const Eigen::VectorXd& a_t, const Eigen::VectorXd& a_prev) {
  RewardInputs in;
  in.v_root = state.root_vel.head<2>();
  in.c_bodies = state.contact_forces;
  const auto critical = model.critical_indices();
  in.c_cb.resize(static_cast<Eigen::Index>(critical.size()));
  for (std::size_t k = 0; k < critical.size(); ++k) {
    in.c_cb[static_cast<Eigen::Index>(k)] =
        state.contact_forces[static_cast<Eigen::Index>(critical[k])];
  }
  in.w_bodies = Eigen::Map<const Eigen::VectorXd>(
      model.contact_weights.data(), static_cast<Eigen::Index>(model.contact_weights.size()));
  in.q = state.q;
  in.qd = state.qd;
  in.qd_prev = qd_prev;
  in.tau = tau;
  in.a_t = a_t;
  in.a_prev = a_prev;
  in.q_l = model.lower_limits();
  in.q_u = model.upper_limits();
  in.tau_u = model.torque_limits();
  return in;
}

std::unique_ptr<Env> make_env(const EnvSpec& spec) {
  switch (spec.task.task) {
    case Task::kFall: return std::make_unique<FallEnv>(spec);
    case Task::kLocomotion: return std::make_unique<LocomotionEnv>(spec);
    case Task::kPendulum: return std::make_unique<PendulumEnv>(spec);
  }
  throw ContractViolation("unknown task");
}

// --- Fall ------------------------------------------------------------------

FallEnv::FallEnv(const EnvSpec& spec)
    : spec_(spec),
      sim_(spec.model, spec.sim),
      builder_(spec.model, 0),
      q0_(spec.model->default_pose()) {}

Eigen::VectorXd FallEnv::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const EpisodeMode mode =
      u(rng) < spec_.schedule.failure_fraction ? EpisodeMode::kFailure : EpisodeMode::kPush;
  setup_ = sample_episode(spec_.schedule, progress_, rng, *spec_.model, mode,
                          spec_.sim.friction_coefficient);
  sim_.set_friction(setup_.friction);
  state_ = setup_.initial;
  pushes_.clear();
  if (setup_.push) pushes_.push_back(*setup_.push);
  failed_.reset();
  if (setup_.failed_joint) failed_ = spec_.model->joint_index(*setup_.failed_joint);
  a_prev_ = q0_;
  steps_ = 0;
  builder_.reset();
  return builder_.observe(state_, a_prev_, Eigen::VectorXd());
}

EnvStep FallEnv::step(const Eigen::VectorXd& action) {
  const Eigen::VectorXd targets = targets_from(q0_, spec_.task.action_scale, action);
  if (failed_ && state_.sim_time + 1e-12 >= setup_.failure_time) {
    state_.failure_mask[*failed_] = true;
  }
  const Eigen::VectorXd qd_prev = state_.qd;
  state_ = sim_.step(state_, as_std(targets), pushes_);
  EnvStep out;
  out.breakdown = compute_reward(
      make_reward_inputs(*spec_.model, state_, qd_prev, sim_.last_torque(), targets, a_prev_),
      spec_.weights, spec_.variant);
  out.reward = out.breakdown.total;
  a_prev_ = targets;
  ++steps_;
  out.done = out.truncated = steps_ >= spec_.task.episode_steps;
  out.observation = builder_.observe(state_, a_prev_, Eigen::VectorXd());
  return out;
}

// --- Locomotion --------------------------------------------------------------

LocomotionEnv::LocomotionEnv(const EnvSpec& spec)
    : spec_(spec),
      sim_(spec.model, spec.sim),
      builder_(spec.model, 1),
      q0_(spec.model->default_pose()) {
  standing_height_ = default_state(*spec.model).root_pose.y();
}

Eigen::VectorXd LocomotionEnv::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const TaskSettings& t = spec_.task;
  const double stance_draw = u(rng);
  const double speed = t.min_speed + (t.max_speed - t.min_speed) * u(rng);
  const bool walking = spec_.model->plane == Plane::kSagittal && stance_draw >= t.stance_fraction;
  command_ = walking ? speed : 0.0;

  state_ = default_state(*spec_.model);
  pushes_.clear();
  const double push_draw = u(rng);
  const double magnitude = t.disturbance_max * u(rng);
  const double direction = u(rng) < 0.5 ? 0.0 : std::numbers::pi;
  const double start = 1.0 + 2.0 * u(rng);
  const std::string body = u(rng) < 0.5 ? "torso" : "pelvis";
  if (push_draw < t.disturbance_probability && spec_.model->find_link(body)) {
    pushes_.push_back(PushEvent{magnitude, direction, body, start, 0.1});
  }
  a_prev_ = q0_;
  steps_ = 0;
  builder_.reset();
  return builder_.observe(state_, a_prev_, Eigen::VectorXd::Constant(1, command_));
}

EnvStep LocomotionEnv::step(const Eigen::VectorXd& action) {
  const Eigen::VectorXd targets = targets_from(q0_, spec_.task.action_scale, action);
  const Eigen::VectorXd qd_prev = state_.qd;
  state_ = sim_.step(state_, as_std(targets), pushes_);

  RewardWeights regularizers = spec_.weights;
  regularizers.root_lin_vel = 0.0;
  regularizers.critical_contact = 0.0;
  regularizers.all_contact = 0.0;
  EnvStep out;
  out.breakdown = compute_reward(
      make_reward_inputs(*spec_.model, state_, qd_prev, sim_.last_torque(), targets, a_prev_),
      regularizers, spec_.variant);

  const std::size_t torso = reference_body(*spec_.model);
  const double lean = body_angle(state_, *spec_.model, torso).angle;
  const double vx = state_.root_vel.x();
  const double task_reward =
      kAliveBonus +
      kTrackingWeight * std::exp(-(vx - command_) * (vx - command_) / kTrackingWidth) +
      kUprightWeight * std::exp(-lean * lean / kUprightWidth);
  out.reward = task_reward + out.breakdown.total;
  a_prev_ = targets;
  ++steps_;
  const bool fallen = std::abs(lean) > kFallenTorsoAngle ||
                      state_.root_pose.y() < kFallenHeightRatio * standing_height_;
  out.truncated = !fallen && steps_ >= spec_.task.episode_steps;
  out.done = fallen || out.truncated;
  out.observation =
      builder_.observe(state_, a_prev_, Eigen::VectorXd::Constant(1, command_));
  return out;
}

// --- Pendulum ---------------------------------------------------------------

PendulumEnv::PendulumEnv(const EnvSpec& spec)
    : spec_(spec),
      sim_(spec.model, spec.sim),
      builder_(spec.model, 0),
      q0_(spec.model->default_pose()) {
  if (spec.model->dof() != 1) throw ValidationError("pendulum task needs a 1-DoF model");
}

Eigen::VectorXd PendulumEnv::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-spec_.task.initial_angle,
                                           spec_.task.initial_angle);
  state_ = default_state(*spec_.model);
  state_.q[0] = u(rng);
  a_prev_ = q0_;
  steps_ = 0;
  builder_.reset();
  return builder_.observe(state_, a_prev_, Eigen::VectorXd());
}

EnvStep PendulumEnv::step(const Eigen::VectorXd& action) {
  const Eigen::VectorXd targets = targets_from(q0_, spec_.task.action_scale, action);
  state_ = sim_.step(state_, as_std(targets), {});
  EnvStep out;
  out.reward = std::cos(state_.q[0]);
  a_prev_ = targets;
  ++steps_;
  out.done = out.truncated = steps_ >= spec_.task.episode_steps;
  out.observation = builder_.observe(state_, a_prev_, Eigen::VectorXd());
  return out;
}

}  // namespace safefall
