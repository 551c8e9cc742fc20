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

#ifndef SAFEFALL_RL_OBSERVATION_HPP_
#define SAFEFALL_RL_OBSERVATION_HPP_

#include <Eigen/Core>
#include <cstddef>
#include <deque>
#include <string_view>

#include "safefall/model/robot_model.hpp"
#include "safefall/sim/types.hpp"

namespace safefall {

inline constexpr int kHistoryLength = 10;

// Frame layout: [omega, angle, q (dof), qd (dof), a_prev (dof)], where omega
// and angle belong to the reference body (torso when present).
struct FrameLayout {
  int dof = 0;
  int angular_velocity() const { return 0; }
  int orientation() const { return 1; }
  int q_begin() const { return 2; }
  int qd_begin() const { return 2 + dof; }
  int a_prev_begin() const { return 2 + 2 * dof; }
  int size() const { return 2 + 3 * dof; }
};

inline int observation_size(int dof) { return kHistoryLength * FrameLayout{dof}.size(); }

// World angle and angular velocity of `link`: root pitch plus the signed
// joint angles along its chain.
struct BodyAngle {
  double angle = 0.0;
  double angular_velocity = 0.0;
};
BodyAngle body_angle(const SimState& state, const RobotModel& model, std::size_t link);

// "torso" if the model has one, otherwise the last link.
std::size_t reference_body(const RobotModel& model);

class ObservationHistory {
 public:
  explicit ObservationHistory(int frame_size);

  int frame_size() const { return frame_size_; }
  std::size_t size() const { return frames_.size(); }
  void clear() { frames_.clear(); }
  // Appends a frame; an empty history is padded with copies of it.
  void push(const Eigen::VectorXd& frame);
  // Oldest frame first.
  Eigen::VectorXd flatten() const;

 private:
  int frame_size_;
  std::deque<Eigen::VectorXd> frames_;
};

Eigen::VectorXd make_frame(const SimState& state, const Eigen::VectorXd& a_prev,
                           const RobotModel& model, std::size_t reference);

// Assembles the current frame, pushes it and returns the flattened history.
// Throws SimulationFault on non-finite input.
Eigen::VectorXd build_observation(const SimState& state, const Eigen::VectorXd& a_prev,
                                  ObservationHistory& history, const RobotModel& model);

}  // namespace safefall

#endif  // SAFEFALL_RL_OBSERVATION_HPP_
