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

#ifndef SAFEFALL_SIM_TYPES_HPP_
#define SAFEFALL_SIM_TYPES_HPP_

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace safefall {

// Full dynamical state of one simulated robot.
//
// root_pose = (x, z, pitch) of the root link frame; root_vel = (vx, vz, w).
// contact_forces holds, per link, the peak planar contact force magnitude
// seen over the substeps of the last step() call.
struct SimState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  Eigen::Vector3d root_pose = Eigen::Vector3d::Zero();
  Eigen::Vector3d root_vel = Eigen::Vector3d::Zero();
  Eigen::VectorXd contact_forces;
  double sim_time = 0.0;
  std::vector<bool> failure_mask;

  bool operator==(const SimState&) const = default;
};

struct PDGains {
  Eigen::VectorXd kp;
  Eigen::VectorXd kd;
};

// Constant force applied at the centre of mass of `target_body` during
// [start_time, start_time + duration). `direction` is the in-plane angle:
// 0 pushes along +x, pi/2 along +z.
struct PushEvent {
  double magnitude = 0.0;
  double direction = 0.0;
  std::string target_body;
  double start_time = 0.0;
  double duration = 0.0;

  bool active_at(double t) const {
    return t >= start_time && t < start_time + duration;
  }
  bool operator==(const PushEvent&) const = default;
};

struct SimConfig {
  double substep_dt = 0.001;
  double pd_dt = 0.005;
  double policy_dt = 0.02;
  double ground_stiffness = 4.0e5;
  double ground_damping = 600.0;
  // Viscous coefficient of the tangential contact term before the Coulomb
  // clamp.
  double tangential_damping = 600.0;
  double friction_coefficient = 0.9;
  double gravity = 9.81;
  // Penalty torque past [q_l, q_u].
  double limit_stiffness = 400.0;
  double limit_damping = 4.0;
  bool joint_limits = true;
  bool self_collision = false;  // not implemented; must stay false

  int pd_per_policy() const;
  int substeps_per_pd() const;

  bool operator==(const SimConfig&) const = default;
};

// Throws ValidationError naming the first violated field.
void validate_sim_config(const SimConfig& config);

}  // namespace safefall

#endif  // SAFEFALL_SIM_TYPES_HPP_
