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

#include "safefall/sim/dynamics.hpp"

#include "safefall/error.hpp"

namespace safefall {

using planar::Mat3;
using planar::Transform;
using planar::Vec2;
using planar::Vec3;

Eigen::Vector2d LinkFrame::to_world(const Eigen::Vector2d& local) const {
  return origin + planar::rotation(angle) * local;
}

Eigen::Vector2d LinkFrame::velocity_of(const Eigen::Vector2d& local) const {
  const Vec2 arm = planar::rotation(angle) * local;
  // com_velocity is the velocity of the com point; shift to `local`.
  const Vec2 com_arm = com - origin;
  return com_velocity + planar::cross(angular_velocity, arm - com_arm);
}

PlanarTree::PlanarTree(const RobotModel& model, double gravity)
    : gravity_(gravity) {
  const bool floating = model.base == BaseType::kFloating;
  root_dof_ = floating ? 3 : 0;
  dof_ = root_dof_ + static_cast<int>(model.dof());

  if (floating) {
    nodes_.push_back(Node{-1, NodeType::kSlideX, 0});
    nodes_.push_back(Node{0, NodeType::kSlideZ, 1});
  }
  link_node_.assign(model.links.size(), -1);
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const Link& link = model.links[i];
    Node node;
    node.link = static_cast<int>(i);
    node.inertia = planar::spatial_inertia(link.mass, link.com, link.inertia);
    if (i == 0) {
      if (floating) {
        node.parent = 1;
        node.type = NodeType::kRevolute;
        node.dof = 2;
      } else {
        node.parent = -1;
        node.type = NodeType::kFixed;
        node.attach = model.base_position;
      }
    } else {
      const std::size_t parent_link = *model.parent_of_link(i);
      node.parent = link_node_[parent_link];
      node.attach = link.attach;
      if (auto joint = model.joint_of_link(i)) {
        node.type = NodeType::kRevolute;
        node.dof = root_dof_ + static_cast<int>(*joint);
        node.axis = model.joints[*joint].axis;
      }
    }
    link_node_[i] = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
  }

  const std::size_t n = nodes_.size();
  xform_.resize(n);
  vel_.assign(n, Vec3::Zero());
  acc_.assign(n, Vec3::Zero());
  force_.assign(n, Vec3::Zero());
  ext_force_.assign(n, Vec3::Zero());
  composite_.assign(n, Mat3::Zero());
  world_angle_.assign(n, 0.0);
  world_origin_.assign(n, Vec2::Zero());
  frames_.resize(model.links.size());
  position_ = Eigen::VectorXd::Zero(dof_);
  velocity_ = Eigen::VectorXd::Zero(dof_);
  mass_ = Eigen::MatrixXd::Zero(dof_, dof_);
  bias_ = Eigen::VectorXd::Zero(dof_);
  qdd_ = Eigen::VectorXd::Zero(dof_);
}

Vec3 PlanarTree::motion_subspace(const Node& node) const {
  switch (node.type) {
    case NodeType::kSlideX:
      return Vec3(0.0, 1.0, 0.0);
    case NodeType::kSlideZ:
      return Vec3(0.0, 0.0, 1.0);
    case NodeType::kRevolute:
      return Vec3(node.axis, 0.0, 0.0);
    case NodeType::kFixed:
      break;
  }
  return Vec3::Zero();
}

void PlanarTree::update(const Eigen::VectorXd& position,
                        const Eigen::VectorXd& velocity) {
  require_size(static_cast<std::size_t>(position.size()),
               static_cast<std::size_t>(dof_), "PlanarTree position");
  require_size(static_cast<std::size_t>(velocity.size()),
               static_cast<std::size_t>(dof_), "PlanarTree velocity");
  position_ = position;
  velocity_ = velocity;

  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Node& node = nodes_[k];
    double angle = 0.0;
    Vec2 origin = node.attach;
    switch (node.type) {
      case NodeType::kSlideX:
        origin.x() += position[node.dof];
        break;
      case NodeType::kSlideZ:
        origin.y() += position[node.dof];
        break;
      case NodeType::kRevolute:
        angle = node.axis * position[node.dof];
        break;
      case NodeType::kFixed:
        break;
    }
    xform_[k] = Transform::make(angle, origin);

    double parent_angle = 0.0;
    Vec2 parent_origin = Vec2::Zero();
    Vec3 parent_vel = Vec3::Zero();
    if (node.parent >= 0) {
      parent_angle = world_angle_[node.parent];
      parent_origin = world_origin_[node.parent];
      parent_vel = vel_[node.parent];
    }
    world_angle_[k] = parent_angle + angle;
    world_origin_[k] = parent_origin + planar::rotation(parent_angle) * origin;

    Vec3 v = xform_[k].apply_motion(parent_vel);
    if (node.dof >= 0) v += motion_subspace(node) * velocity[node.dof];
    vel_[k] = v;

    if (node.link >= 0) {
      LinkFrame& frame = frames_[node.link];
      const auto& inertia = node.inertia;
      const double mass = inertia(1, 1);
      // Recover the com offset from the spatial inertia.
      const Vec2 com_local =
          mass > 0.0 ? Vec2(inertia(0, 2) / mass, -inertia(0, 1) / mass)
                     : Vec2::Zero();
      const auto rot = planar::rotation(world_angle_[k]);
      frame.origin = world_origin_[k];
      frame.angle = world_angle_[k];
      frame.com = frame.origin + rot * com_local;
      frame.angular_velocity = v[0];
      frame.com_velocity =
          rot * (v.tail<2>() + planar::cross(v[0], com_local));
    }
  }
}

const Eigen::MatrixXd& PlanarTree::mass_matrix() {
  const int n = static_cast<int>(nodes_.size());
  for (int k = 0; k < n; ++k) composite_[k] = nodes_[k].inertia;
  for (int k = n - 1; k >= 0; --k) {
    const int parent = nodes_[k].parent;
    if (parent >= 0) {
      const Mat3 x = xform_[k].matrix();
      composite_[parent].noalias() += x.transpose() * composite_[k] * x;
    }
  }
  mass_.setZero();
  for (int k = 0; k < n; ++k) {
    const Node& node = nodes_[k];
    if (node.dof < 0) continue;
    Vec3 f = composite_[k] * motion_subspace(node);
    mass_(node.dof, node.dof) = motion_subspace(node).dot(f);
    int j = k;
    while (nodes_[j].parent >= 0) {
      f = xform_[j].apply_force_transpose(f);
      j = nodes_[j].parent;
      if (nodes_[j].dof >= 0) {
        const double value = f.dot(motion_subspace(nodes_[j]));
        mass_(node.dof, nodes_[j].dof) = value;
        mass_(nodes_[j].dof, node.dof) = value;
      }
    }
  }
  return mass_;
}

void PlanarTree::clear_external_forces() {
  for (auto& f : ext_force_) f.setZero();
}

void PlanarTree::add_point_force(std::size_t link,
                                 const Eigen::Vector2d& local_point,
                                 const Eigen::Vector2d& world_force) {
  const int k = link_node_[link];
  const Vec2 body_force =
      planar::rotation(world_angle_[k]).transpose() * world_force;
  ext_force_[k] += Vec3(planar::cross(local_point, body_force), body_force.x(),
                        body_force.y());
}

const Eigen::VectorXd& PlanarTree::bias() {
  const int n = static_cast<int>(nodes_.size());
  // Uniform gravity as a fictitious upward base acceleration.
  const Vec3 base_acc(0.0, 0.0, gravity_);
  for (int k = 0; k < n; ++k) {
    const Node& node = nodes_[k];
    const Vec3 parent_acc = node.parent >= 0 ? acc_[node.parent] : base_acc;
    Vec3 a = xform_[k].apply_motion(parent_acc);
    if (node.dof >= 0) {
      a += planar::cross_motion(vel_[k],
                                motion_subspace(node) * velocity_[node.dof]);
    }
    acc_[k] = a;
    const Vec3 momentum = node.inertia * vel_[k];
    force_[k] = node.inertia * a + planar::cross_force(vel_[k], momentum) -
                ext_force_[k];
  }
  for (int k = n - 1; k >= 0; --k) {
    const Node& node = nodes_[k];
    if (node.dof >= 0) bias_[node.dof] = motion_subspace(node).dot(force_[k]);
    if (node.parent >= 0) {
      force_[node.parent] += xform_[k].apply_force_transpose(force_[k]);
    }
  }
  return bias_;
}

const Eigen::VectorXd& PlanarTree::forward_dynamics(const Eigen::VectorXd& tau) {
  require_size(static_cast<std::size_t>(tau.size()),
               static_cast<std::size_t>(dof_), "PlanarTree tau");
  const Eigen::VectorXd& c = bias();
  ldlt_.compute(mass_matrix());
  qdd_ = ldlt_.solve(tau - c);
  return qdd_;
}

}  // namespace safefall
