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

#ifndef SAFEFALL_CURRICULUM_CURRICULUM_HPP_
#define SAFEFALL_CURRICULUM_CURRICULUM_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "safefall/model/robot_model.hpp"
#include "safefall/sim/types.hpp"

namespace safefall {

// p = min(step_count / total_steps, 1).
double progress(std::int64_t step_count, std::int64_t total_steps);

// Uniform range whose endpoints move linearly with progress:
// low(p) = low_base + low_slope p, high(p) = high_base + high_slope p.
struct LinearRange {
  double low_base = 0.0;
  double low_slope = 0.0;
  double high_base = 0.0;
  double high_slope = 0.0;

  double low(double p) const { return low_base + low_slope * p; }
  double high(double p) const { return high_base + high_slope * p; }
  bool operator==(const LinearRange&) const = default;
};

struct CurriculumSchedule {
  // Multiplies q0 per joint.
  LinearRange init_dof_scale{0.8, 0.0, 1.2, 0.0};
  LinearRange waist_pitch{-0.5, 0.0, 0.5, 0.0};
  LinearRange waist_roll{-0.5, 0.0, 0.5, 0.0};
  // Recorded but has no joint to act on in either planar model.
  LinearRange waist_yaw{-0.2, -1.0, 0.2, 1.0};
  LinearRange shoulder_pitch{-0.4, -1.0, 0.4, 1.0};
  LinearRange shoulder_roll{0.15, 0.0, 0.15, 1.3};
  LinearRange elbow{-0.1, -0.3, 0.1, 0.6};
  // Applies to v_x and v_y; the sagittal model keeps v_x, the frontal v_y.
  LinearRange root_vel{-0.1, -0.25, 0.1, 0.25};
  LinearRange push_magnitude{50.0, 100.0, 350.0, 500.0};
  // Horizontal heading, 0 = forward, pi/2 = robot's left.
  LinearRange push_direction{-3.141592653589793, 0.0, 3.141592653589793, 0.0};
  LinearRange push_duration{0.1, 0.0, 0.3, 0.0};
  LinearRange push_start{0.5, 0.0, 1.5, 0.0};
  std::vector<std::string> push_bodies{"head", "torso", "pelvis"};
  // Empty means every joint in the model's leg group.
  std::vector<std::string> failure_joints;
  // Share of training episodes run in failure mode.
  double failure_fraction = 0.2;
  bool friction_randomization = false;
  LinearRange friction{0.6, 0.0, 1.2, 0.0};

  bool operator==(const CurriculumSchedule&) const = default;
};

// Throws ValidationError naming the row when low > high somewhere on [0, 1].
void validate_schedule(const CurriculumSchedule& schedule);
// Throws ValidationError when a push body or failure joint is not in the model.
void check_schedule_names(const CurriculumSchedule& schedule, const RobotModel& model);

enum class EpisodeMode { kPush, kFailure };

struct EpisodeSetup {
  SimState initial;
  std::optional<PushEvent> push;
  std::optional<std::string> failed_joint;
  // When the failed joint stops producing torque.
  double failure_time = 0.0;
  // Sampled horizontal heading before projection onto the model plane.
  double push_heading = 0.0;
  double friction = 0.0;
  double progress = 0.0;
};

// In-plane force angle and the magnitude scale for a horizontal heading.
// Sagittal keeps the forward component, frontal the leftward component.
struct PlanarPush {
  double direction = 0.0;
  double scale = 0.0;
};
PlanarPush project_heading(double heading, Plane plane);

std::vector<std::string> failure_candidates(const CurriculumSchedule& schedule,
                                            const RobotModel& model);

// Draws one episode. Every quantity is drawn in a fixed order regardless of
// mode so the generator advances identically for both modes.
EpisodeSetup sample_episode(const CurriculumSchedule& schedule, double p,
                            std::mt19937_64& rng, const RobotModel& model,
                            EpisodeMode mode, double default_friction = 0.9);

}  // namespace safefall

#endif  // SAFEFALL_CURRICULUM_CURRICULUM_HPP_
