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

#include "safefall/rl/observation.hpp"

#include <cmath>
#include <string>

#include "safefall/error.hpp"

namespace safefall {

BodyAngle body_angle(const SimState& state, const RobotModel& model, std::size_t link) {
  BodyAngle out;
  std::optional<std::size_t> current = link;
  while (current) {
    if (auto joint = model.joint_of_link(*current)) {
      const double axis = model.joints[*joint].axis;
      const auto j = static_cast<Eigen::Index>(*joint);
      out.angle += axis * state.q[j];
      out.angular_velocity += axis * state.qd[j];
    }
    current = model.parent_of_link(*current);
  }
  if (model.base == BaseType::kFloating) {
    out.angle += state.root_pose.z();
    out.angular_velocity += state.root_vel.z();
  }
  return out;
}

std::size_t reference_body(const RobotModel& model) {
  if (auto torso = model.find_link("torso")) return *torso;
  return model.links.size() - 1;
}

ObservationHistory::ObservationHistory(int frame_size) : frame_size_(frame_size) {
  if (frame_size <= 0) throw ContractViolation("frame size must be > 0");
}

void ObservationHistory::push(const Eigen::VectorXd& frame) {
  require_size(static_cast<std::size_t>(frame.size()),
               static_cast<std::size_t>(frame_size_), "observation frame");
  if (frames_.empty()) {
    frames_.assign(kHistoryLength, frame);
    return;
  }
  frames_.pop_front();
  frames_.push_back(frame);
}

Eigen::VectorXd ObservationHistory::flatten() const {
  if (frames_.empty()) throw ContractViolation("observation history is empty");
  Eigen::VectorXd out(static_cast<Eigen::Index>(frames_.size()) * frame_size_);
  Eigen::Index offset = 0;
  for (const auto& f : frames_) {
    out.segment(offset, frame_size_) = f;
    offset += frame_size_;
  }
  return out;
}

Eigen::VectorXd make_frame(const SimState& state, const Eigen::VectorXd& a_prev,
                           const RobotModel& model, std::size_t reference) {
  const FrameLayout layout{static_cast<int>(model.dof())};
  require_size(static_cast<std::size_t>(state.q.size()), model.dof(), "observation q");
  require_size(static_cast<std::size_t>(state.qd.size()), model.dof(), "observation qd");
  require_size(static_cast<std::size_t>(a_prev.size()), model.dof(), "observation a_prev");
  Eigen::VectorXd frame(layout.size());
  const BodyAngle ref = body_angle(state, model, reference);
  frame[layout.angular_velocity()] = ref.angular_velocity;
  frame[layout.orientation()] = ref.angle;
  frame.segment(layout.q_begin(), layout.dof) = state.q;
  frame.segment(layout.qd_begin(), layout.dof) = state.qd;
  frame.segment(layout.a_prev_begin(), layout.dof) = a_prev;
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    if (!std::isfinite(frame[i])) {
      throw SimulationFault("observation", "entry " + std::to_string(i) + " is not finite");
    }
  }
  return frame;
}

Eigen::VectorXd build_observation(const SimState& state, const Eigen::VectorXd& a_prev,
                                  ObservationHistory& history, const RobotModel& model) {
  history.push(make_frame(state, a_prev, model, reference_body(model)));
  return history.flatten();
}

}  // namespace safefall
