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

#ifndef SAFEFALL_SIM_SIMULATOR_HPP_
#define SAFEFALL_SIM_SIMULATOR_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "safefall/model/robot_model.hpp"
#include "safefall/sim/dynamics.hpp"
#include "safefall/sim/types.hpp"

namespace safefall {

// tau = kp (a - q) - kd qd, zeroed on failed joints, then clamped to
// +-torque_limit. Throws ContractViolation on length mismatch.
Eigen::VectorXd pd_torque(std::span<const double> action,
                          std::span<const double> q, std::span<const double> qd,
                          const PDGains& gains,
                          const std::vector<bool>& failure_mask,
                          std::span<const double> torque_limit);

// Force on a single sample point from the spring-damper ground at z = 0.
Eigen::Vector2d contact_point_force(const Eigen::Vector2d& position,
                                    const Eigen::Vector2d& velocity,
                                    const SimConfig& config);

// Per-body total planar contact force for per-body sample points.
std::vector<Eigen::Vector2d> compute_ground_contact(
    const std::vector<std::vector<Eigen::Vector2d>>& body_points,
    const std::vector<std::vector<Eigen::Vector2d>>& body_velocities,
    const SimConfig& config);

// Per-body kinematic state of a SimState, in world coordinates.
struct BodyMotion {
  std::vector<Eigen::Vector2d> com;
  std::vector<Eigen::Vector2d> com_velocity;
  std::vector<double> angle;
  std::vector<double> angular_velocity;
};
BodyMotion body_motion(const SimState& state, const RobotModel& model);

// Sum over bodies of 1/2 m |v|^2 + 1/2 I w^2 + m g h.
double mechanical_energy(const SimState& state, const RobotModel& model,
                         double gravity = 9.81);

enum class DriveMode {
  kPositionTargets,
  // Actuators output zero torque regardless of the action.
  kZeroTorque,
};

// Snapshot handed to the observer after every PD period.
struct PdSample {
  const SimState& state;
  // Peak per-body contact force over the substeps of this PD period.
  const Eigen::VectorXd& contact_forces;
  const Eigen::VectorXd& torque;
  // Link frames evaluated at `state`.
  const PlanarTree& tree;
  int pd_index = 0;
};

using PdObserver = std::function<void(const PdSample&)>;

struct StepCounters {
  std::int64_t steps = 0;
  std::int64_t pd_updates = 0;
  std::int64_t substeps = 0;
};

// Advances a robot by one policy period: the action is held for the whole
// period, PD torques are recomputed every pd_dt and the dynamics integrated
// every substep_dt with semi-implicit Euler.
//
// One instance per environment; not safe to share while stepping.
class Simulator {
 public:
  Simulator(std::shared_ptr<const RobotModel> model, SimConfig config);

  const RobotModel& model() const { return *model_; }
  const SimConfig& config() const { return config_; }
  // Friction randomization hook; everything else in the config is fixed.
  void set_friction(double mu);

  SimState step(const SimState& state, std::span<const double> action,
                std::span<const PushEvent> pushes,
                DriveMode mode = DriveMode::kPositionTargets,
                const PdObserver& observer = nullptr);

  // Torques applied during the last PD period of the last step.
  const Eigen::VectorXd& last_torque() const { return torque_; }
  const StepCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = StepCounters{}; }

 private:
  void load_state(const SimState& state);
  void store_state(SimState& state) const;
  void substep(std::span<const PushEvent> pushes);

  std::shared_ptr<const RobotModel> model_;
  SimConfig config_;
  PlanarTree tree_;
  int root_dof_ = 0;
  PDGains gains_;
  Eigen::VectorXd torque_limit_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::vector<std::size_t> push_targets_;

  Eigen::VectorXd position_;
  Eigen::VectorXd velocity_;
  Eigen::VectorXd generalized_force_;
  Eigen::VectorXd torque_;
  Eigen::VectorXd substep_contact_;
  Eigen::VectorXd pd_contact_;
  Eigen::VectorXd policy_contact_;
  std::vector<bool> failure_mask_;
  double time_ = 0.0;
  StepCounters counters_;
};

// Convenience wrapper for one-off steps; builds a Simulator per call.
SimState step(const SimState& state, std::span<const double> action,
              const SimConfig& config, const RobotModel& model,
              std::span<const PushEvent> pushes);

}  // namespace safefall

#endif  // SAFEFALL_SIM_SIMULATOR_HPP_
