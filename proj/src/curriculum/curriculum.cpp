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

#include "safefall/curriculum/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>
#include <utility>

#include "safefall/error.hpp"

namespace safefall {

namespace {

double draw(const LinearRange& range, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(range.low(p), range.high(p));
  return u(rng);
}

std::size_t pick(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> u(0, n - 1);
  return u(rng);
}

// "l_elbow" and "elbow" both match row "elbow".
bool joint_matches(std::string_view joint, std::string_view row) {
  if (joint == row) return true;
  return joint.size() > row.size() + 1 && joint.ends_with(row) &&
         joint[joint.size() - row.size() - 1] == '_';
}

}  // namespace

double progress(std::int64_t step_count, std::int64_t total_steps) {
  if (step_count < 0 || total_steps <= 0) {
    throw ContractViolation("progress needs step_count >= 0 and total_steps > 0");
  }
  return std::min(static_cast<double>(step_count) / static_cast<double>(total_steps),
                  1.0);
}

void validate_schedule(const CurriculumSchedule& s) {
  const std::pair<const LinearRange*, const char*> rows[] = {
      {&s.init_dof_scale, "init_dof_scale"}, {&s.waist_pitch, "waist_pitch"},
      {&s.waist_roll, "waist_roll"},         {&s.waist_yaw, "waist_yaw"},
      {&s.shoulder_pitch, "shoulder_pitch"}, {&s.shoulder_roll, "shoulder_roll"},
      {&s.elbow, "elbow"},                   {&s.root_vel, "root_vel"},
      {&s.push_magnitude, "push_magnitude"}, {&s.push_direction, "push_direction"},
      {&s.push_duration, "push_duration"},   {&s.push_start, "push_start"},
      {&s.friction, "friction"}};
  for (const auto& [range, name] : rows) {
    for (double p : {0.0, 1.0}) {
      if (!std::isfinite(range->low(p)) || !std::isfinite(range->high(p)) ||
          range->low(p) > range->high(p)) {
        throw ValidationError(std::string("curriculum.") + name +
                              ": requires finite low <= high for p in [0, 1]");
      }
    }
  }
  if (s.push_magnitude.low(0.0) < 0.0 || s.push_magnitude.low(1.0) < 0.0) {
    throw ValidationError("curriculum.push_magnitude must stay >= 0");
  }
  if (s.push_duration.low(0.0) <= 0.0 || s.push_duration.low(1.0) <= 0.0) {
    throw ValidationError("curriculum.push_duration must stay > 0");
  }
  if (s.push_start.low(0.0) < 0.0 || s.push_start.low(1.0) < 0.0) {
    throw ValidationError("curriculum.push_start must stay >= 0");
  }
  if (s.friction.low(0.0) < 0.0 || s.friction.low(1.0) < 0.0) {
    throw ValidationError("curriculum.friction must stay >= 0");
  }
  if (s.push_bodies.empty()) {
    throw ValidationError("curriculum.push_bodies must not be empty");
  }
  if (!(s.failure_fraction >= 0.0 && s.failure_fraction <= 1.0)) {
    throw ValidationError("curriculum.failure_fraction must be in [0, 1]");
  }
}

void check_schedule_names(const CurriculumSchedule& s, const RobotModel& model) {
  for (const auto& body : s.push_bodies) {
    if (!model.find_link(body)) {
      throw ValidationError("curriculum.push_bodies: unknown body '" + body + "'");
    }
  }
  for (const auto& joint : s.failure_joints) {
    if (!model.find_joint(joint)) {
      throw ValidationError("curriculum.failure_joints: unknown joint '" + joint + "'");
    }
  }
  if (failure_candidates(s, model).empty()) {
    throw ValidationError("curriculum: model has no leg joints to fail");
  }
}

PlanarPush project_heading(double heading, Plane plane) {
  const double component =
      plane == Plane::kSagittal ? std::cos(heading) : std::sin(heading);
  return PlanarPush{component >= 0.0 ? 0.0 : 3.141592653589793, std::abs(component)};
}

std::vector<std::string> failure_candidates(const CurriculumSchedule& schedule,
                                            const RobotModel& model) {
  if (!schedule.failure_joints.empty()) return schedule.failure_joints;
  std::vector<std::string> out;
  for (std::size_t j : model.joints_in_group(JointGroup::kLeg)) {
    out.push_back(model.joints[j].name);
  }
  return out;
}

EpisodeSetup sample_episode(const CurriculumSchedule& s, double p,
                            std::mt19937_64& rng, const RobotModel& model,
                            EpisodeMode mode, double default_friction) {
  if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("progress must be in [0, 1]");
  EpisodeSetup out;
  out.progress = p;
  out.initial = default_state(model);
  SimState& st = out.initial;
  const Eigen::VectorXd q0 = model.default_pose();

  for (Eigen::Index j = 0; j < st.q.size(); ++j) {
    st.q[j] = q0[j] * draw(s.init_dof_scale, p, rng);
  }
  const std::pair<const LinearRange*, std::string_view> extra[] = {
      {&s.waist_pitch, "waist_pitch"},       {&s.waist_roll, "waist_roll"},
      {&s.waist_yaw, "waist_yaw"},           {&s.shoulder_pitch, "shoulder_pitch"},
      {&s.shoulder_roll, "shoulder_roll"},   {&s.elbow, "elbow"}};
  for (const auto& [range, row] : extra) {
    for (std::size_t j = 0; j < model.dof(); ++j) {
      // One draw per joint slot keeps the stream independent of the model.
      const double value = draw(*range, p, rng);
      if (joint_matches(model.joints[j].name, row)) {
        st.q[static_cast<Eigen::Index>(j)] = value;
      }
    }
  }
  const Eigen::VectorXd lo = model.lower_limits(), hi = model.upper_limits();
  st.q = st.q.cwiseMax(lo).cwiseMin(hi);

  const double vx = draw(s.root_vel, p, rng);
  const double vy = draw(s.root_vel, p, rng);
  if (model.base == BaseType::kFloating) {
    st.root_pose.z() = 0.0;
    place_on_ground(st, model);
    st.root_vel = Eigen::Vector3d(model.plane == Plane::kSagittal ? vx : vy, 0.0, 0.0);
  }

  const double magnitude = draw(s.push_magnitude, p, rng);
  const double heading = draw(s.push_direction, p, rng);
  const double duration = draw(s.push_duration, p, rng);
  const double start = draw(s.push_start, p, rng);
  const std::size_t body = pick(s.push_bodies.size(), rng);
  const auto candidates = failure_candidates(s, model);
  const std::size_t failed = candidates.empty() ? 0 : pick(candidates.size(), rng);
  const double friction = draw(s.friction, p, rng);

  out.push_heading = heading;
  out.friction = s.friction_randomization ? friction : default_friction;
  if (mode == EpisodeMode::kPush) {
    const PlanarPush planar = project_heading(heading, model.plane);
    out.push = PushEvent{magnitude * planar.scale, planar.direction,
                         s.push_bodies[body], start, duration};
  } else {
    if (candidates.empty()) throw ContractViolation("no joints available to fail");
    out.failed_joint = candidates[failed];
    out.failure_time = start;
  }
  return out;
}

}  // namespace safefall
