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

#ifndef SAFEFALL_SIM_DYNAMICS_HPP_
#define SAFEFALL_SIM_DYNAMICS_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "safefall/model/robot_model.hpp"
#include "safefall/sim/planar.hpp"

namespace safefall {

// World-frame pose and velocity of one link.
struct LinkFrame {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double angle = 0.0;
  Eigen::Vector2d com = Eigen::Vector2d::Zero();
  Eigen::Vector2d com_velocity = Eigen::Vector2d::Zero();
  double angular_velocity = 0.0;

  Eigen::Vector2d to_world(const Eigen::Vector2d& local) const;
  Eigen::Vector2d velocity_of(const Eigen::Vector2d& local) const;
};

// Reduced-coordinate planar multibody. Generalized coordinates are
// [x, z, pitch, q...] for floating-base models (root pose first) and [q...]
// for fixed-base models. The floating base is realised as a massless
// prismatic-x / prismatic-z / revolute chain so every node has at most one
// degree of freedom.
class PlanarTree {
 public:
  explicit PlanarTree(const RobotModel& model, double gravity);

  int dof() const { return dof_; }
  int root_dof() const { return root_dof_; }
  std::size_t link_count() const { return link_node_.size(); }

  // Recomputes transforms, velocities and world frames. Must be called
  // before any query below.
  void update(const Eigen::VectorXd& position, const Eigen::VectorXd& velocity);

  const LinkFrame& frame(std::size_t link) const { return frames_[link]; }

  // Composite-rigid-body mass matrix.
  const Eigen::MatrixXd& mass_matrix();

  // Clears and accumulates world-frame point forces for the next bias()
  // call. `local_point` is in link coordinates.
  void clear_external_forces();
  void add_point_force(std::size_t link, const Eigen::Vector2d& local_point,
                       const Eigen::Vector2d& world_force);

  // Recursive Newton-Euler with zero acceleration: Coriolis, centrifugal,
  // gravity and external-force terms, C such that M qdd + C = tau.
  const Eigen::VectorXd& bias();

  // Solves M qdd = tau - C with the current state and external forces.
  const Eigen::VectorXd& forward_dynamics(const Eigen::VectorXd& tau);

 private:
  enum class NodeType { kSlideX, kSlideZ, kRevolute, kFixed };

  struct Node {
    int parent = -1;
    NodeType type = NodeType::kFixed;
    int dof = -1;
    double axis = 1.0;
    Eigen::Vector2d attach = Eigen::Vector2d::Zero();
    planar::Mat3 inertia = planar::Mat3::Zero();
    int link = -1;
  };

  planar::Vec3 motion_subspace(const Node& node) const;

  std::vector<Node> nodes_;
  std::vector<int> link_node_;
  int dof_ = 0;
  int root_dof_ = 0;
  double gravity_ = 9.81;

  // Per-node workspace.
  std::vector<planar::Transform> xform_;
  std::vector<planar::Vec3> vel_;
  std::vector<planar::Vec3> acc_;
  std::vector<planar::Vec3> force_;
  std::vector<planar::Vec3> ext_force_;
  std::vector<planar::Mat3> composite_;
  std::vector<double> world_angle_;
  std::vector<Eigen::Vector2d> world_origin_;
  std::vector<LinkFrame> frames_;

  Eigen::VectorXd position_;
  Eigen::VectorXd velocity_;
  Eigen::MatrixXd mass_;
  Eigen::VectorXd bias_;
  Eigen::VectorXd qdd_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

}  // namespace safefall

#endif  // SAFEFALL_SIM_DYNAMICS_HPP_
