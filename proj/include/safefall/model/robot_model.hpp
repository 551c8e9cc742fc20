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

#ifndef SAFEFALL_MODEL_ROBOT_MODEL_HPP_
#define SAFEFALL_MODEL_ROBOT_MODEL_HPP_

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safefall {

struct SimState;

enum class Plane { kSagittal, kFrontal };
enum class BaseType { kFloating, kFixed };
// Humanoid models carry the full set of body-level invariants; generic
// models (single pendulum etc.) only need a valid kinematic tree.
enum class ModelKind { kHumanoid, kGeneric };
enum class JointGroup { kWaist, kArm, kLeg, kOther };

std::string_view to_string(Plane plane);
std::string_view to_string(JointGroup group);

// A rigid body. Geometry is expressed in the link frame, whose origin sits at
// the proximal joint. Angles follow the right-hand rule in the (x, z) plane,
// i.e. a positive rotation turns +x towards +z.
struct Link {
  std::string name;
  double mass = 0.0;
  double inertia = 0.0;  // about the centre of mass
  double length = 0.0;
  Eigen::Vector2d com = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> contact_points;
  // Empty for the root link.
  std::string parent;
  // Link frame origin expressed in the parent frame.
  Eigen::Vector2d attach = Eigen::Vector2d::Zero();

  bool operator==(const Link&) const = default;
};

struct Joint {
  std::string name;
  std::string parent;
  std::string child;
  double lower = 0.0;
  double upper = 0.0;
  double torque_limit = 0.0;
  double default_angle = 0.0;
  double kp = 0.0;
  double kd = 0.0;
  // +1 or -1: child rotation relative to the parent is axis * q. Right-side
  // joints use -1 so that a positive angle means the same motion on both
  // sides (abduction, flexion).
  double axis = 1.0;
  JointGroup group = JointGroup::kOther;

  bool operator==(const Joint&) const = default;
};

// Immutable, validated model. Link order is topological (parents first).
class RobotModel {
 public:
  std::string name;
  ModelKind kind = ModelKind::kHumanoid;
  Plane plane = Plane::kSagittal;
  BaseType base = BaseType::kFloating;
  // Root frame position for fixed-base models.
  Eigen::Vector2d base_position = Eigen::Vector2d::Zero();
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<std::string> critical_bodies;
  std::vector<std::string> ankle_bodies;
  std::vector<double> contact_weights;  // one per link
  std::string notes;

  std::size_t dof() const { return joints.size(); }
  std::size_t body_count() const { return links.size(); }

  std::optional<std::size_t> find_link(std::string_view link_name) const;
  std::optional<std::size_t> find_joint(std::string_view joint_name) const;
  std::size_t link_index(std::string_view link_name) const;    // throws
  std::size_t joint_index(std::string_view joint_name) const;  // throws

  // Index of the joint whose child is `link`, or nullopt for fixed/root links.
  std::optional<std::size_t> joint_of_link(std::size_t link) const;
  std::optional<std::size_t> parent_of_link(std::size_t link) const;

  std::vector<std::size_t> critical_indices() const;
  std::vector<std::size_t> joints_in_group(JointGroup group) const;

  Eigen::VectorXd default_pose() const;
  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  Eigen::VectorXd torque_limits() const;
  Eigen::VectorXd kp() const;
  Eigen::VectorXd kd() const;
  double total_mass() const;

  bool operator==(const RobotModel&) const = default;
};

// Parses and validates a model document. Throws ParseError for malformed
// JSON or unknown/mistyped fields, ValidationError naming the violated
// invariant otherwise.
RobotModel load_model(std::string_view document);
RobotModel load_model_file(const std::filesystem::path& path);

// Serializes to the same document format `load_model` reads.
std::string save_model(const RobotModel& model);

// Re-runs every invariant check; used by load_model and by callers that
// construct models in code.
void validate_model(const RobotModel& model);

// Default pose at rest, root lowered until the lowest contact point touches
// the ground plane with zero penetration.
SimState default_state(const RobotModel& model);

// Sets the root height of a floating-base state so that its lowest contact
// point sits exactly on the ground. Root x, pitch and joints are kept.
void place_on_ground(SimState& state, const RobotModel& model);

}  // namespace safefall

#endif  // SAFEFALL_MODEL_ROBOT_MODEL_HPP_
