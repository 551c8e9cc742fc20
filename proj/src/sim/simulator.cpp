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

#include "safefall/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safefall/error.hpp"

namespace safefall {

namespace {

bool is_integer_ratio(double num, double den) {
  const double ratio = num / den;
  return ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) < 1e-9;
}

template <typename Vec>
void require_finite(const Vec& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw SimulationFault(name, "entry " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace

int SimConfig::pd_per_policy() const {
  return static_cast<int>(std::lround(policy_dt / pd_dt));
}

int SimConfig::substeps_per_pd() const {
  return static_cast<int>(std::lround(pd_dt / substep_dt));
}

void validate_sim_config(const SimConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string("sim.") + name + " must be > 0");
    }
  };
  positive(c.substep_dt, "substep_dt");
  positive(c.pd_dt, "pd_dt");
  positive(c.policy_dt, "policy_dt");
  if (!(c.substep_dt <= c.pd_dt && c.pd_dt <= c.policy_dt)) {
    throw ValidationError("sim: requires substep_dt <= pd_dt <= policy_dt");
  }
  if (!is_integer_ratio(c.pd_dt, c.substep_dt)) {
    throw ValidationError("sim.pd_dt must be an integer multiple of substep_dt");
  }
  if (!is_integer_ratio(c.policy_dt, c.pd_dt)) {
    throw ValidationError("sim.policy_dt must be an integer multiple of pd_dt");
  }
  if (!(c.friction_coefficient >= 0.0)) {
    throw ValidationError("sim.friction_coefficient must be >= 0");
  }
  for (auto [v, name] : {std::pair{c.ground_stiffness, "ground_stiffness"},
                         std::pair{c.ground_damping, "ground_damping"},
                         std::pair{c.tangential_damping, "tangential_damping"},
                         std::pair{c.limit_stiffness, "limit_stiffness"},
                         std::pair{c.limit_damping, "limit_damping"},
                         std::pair{c.gravity, "gravity"}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string("sim.") + name + " must be >= 0");
    }
  }
  if (c.self_collision) {
    throw ValidationError("sim.self_collision is not supported");
  }
}

Eigen::VectorXd pd_torque(std::span<const double> action,
                          std::span<const double> q, std::span<const double> qd,
                          const PDGains& gains,
                          const std::vector<bool>& failure_mask,
                          std::span<const double> torque_limit) {
  const std::size_t n = q.size();
  require_size(action.size(), n, "pd_torque action");
  require_size(qd.size(), n, "pd_torque qd");
  require_size(static_cast<std::size_t>(gains.kp.size()), n, "pd_torque kp");
  require_size(static_cast<std::size_t>(gains.kd.size()), n, "pd_torque kd");
  require_size(failure_mask.size(), n, "pd_torque failure_mask");
  require_size(torque_limit.size(), n, "pd_torque torque_limit");
  Eigen::VectorXd tau(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    if (failure_mask[j]) {
      tau[i] = 0.0;
      continue;
    }
    const double raw = gains.kp[i] * (action[j] - q[j]) - gains.kd[i] * qd[j];
    tau[i] = std::clamp(raw, -torque_limit[j], torque_limit[j]);
  }
  return tau;
}

Eigen::Vector2d contact_point_force(const Eigen::Vector2d& position,
                                    const Eigen::Vector2d& velocity,
                                    const SimConfig& config) {
  const double height = position.y();
  if (!(height < 0.0)) return Eigen::Vector2d::Zero();
  const double normal = std::max(
      0.0, -config.ground_stiffness * height - config.ground_damping * velocity.y());
  const double limit = config.friction_coefficient * normal;
  const double tangential =
      std::clamp(-config.tangential_damping * velocity.x(), -limit, limit);
  return Eigen::Vector2d(tangential, normal);
}

std::vector<Eigen::Vector2d> compute_ground_contact(
    const std::vector<std::vector<Eigen::Vector2d>>& body_points,
    const std::vector<std::vector<Eigen::Vector2d>>& body_velocities,
    const SimConfig& config) {
  require_size(body_velocities.size(), body_points.size(),
               "compute_ground_contact bodies");
  std::vector<Eigen::Vector2d> out(body_points.size(), Eigen::Vector2d::Zero());
  for (std::size_t b = 0; b < body_points.size(); ++b) {
    require_size(body_velocities[b].size(), body_points[b].size(),
                 "compute_ground_contact points");
    for (std::size_t k = 0; k < body_points[b].size(); ++k) {
      out[b] += contact_point_force(body_points[b][k], body_velocities[b][k], config);
    }
  }
  return out;
}

namespace {

Eigen::VectorXd generalized_position(const SimState& s, const RobotModel& model) {
  const bool floating = model.base == BaseType::kFloating;
  const Eigen::Index root = floating ? 3 : 0;
  Eigen::VectorXd out(root + s.q.size());
  if (floating) out.head<3>() = s.root_pose;
  out.tail(s.q.size()) = s.q;
  return out;
}

Eigen::VectorXd generalized_velocity(const SimState& s, const RobotModel& model) {
  const bool floating = model.base == BaseType::kFloating;
  const Eigen::Index root = floating ? 3 : 0;
  Eigen::VectorXd out(root + s.qd.size());
  if (floating) out.head<3>() = s.root_vel;
  out.tail(s.qd.size()) = s.qd;
  return out;
}

}  // namespace

BodyMotion body_motion(const SimState& state, const RobotModel& model) {
  PlanarTree tree(model, 0.0);
  tree.update(generalized_position(state, model), generalized_velocity(state, model));
  BodyMotion out;
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const LinkFrame& f = tree.frame(i);
    out.com.push_back(f.com);
    out.com_velocity.push_back(f.com_velocity);
    out.angle.push_back(f.angle);
    out.angular_velocity.push_back(f.angular_velocity);
  }
  return out;
}

double mechanical_energy(const SimState& state, const RobotModel& model,
                         double gravity) {
  const BodyMotion motion = body_motion(state, model);
  double energy = 0.0;
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const Link& link = model.links[i];
    energy += 0.5 * link.mass * motion.com_velocity[i].squaredNorm() +
              0.5 * link.inertia * motion.angular_velocity[i] *
                  motion.angular_velocity[i] +
              link.mass * gravity * motion.com[i].y();
  }
  return energy;
}

// ---------------------------------------------------------------------------

Simulator::Simulator(std::shared_ptr<const RobotModel> model, SimConfig config)
    : model_(std::move(model)),
      config_(config),
      tree_(*model_, config.gravity) {
  validate_sim_config(config_);
  root_dof_ = tree_.root_dof();
  gains_.kp = model_->kp();
  gains_.kd = model_->kd();
  torque_limit_ = model_->torque_limits();
  lower_ = model_->lower_limits();
  upper_ = model_->upper_limits();
  const auto n = static_cast<Eigen::Index>(model_->dof());
  const auto bodies = static_cast<Eigen::Index>(model_->body_count());
  position_ = Eigen::VectorXd::Zero(tree_.dof());
  velocity_ = Eigen::VectorXd::Zero(tree_.dof());
  generalized_force_ = Eigen::VectorXd::Zero(tree_.dof());
  torque_ = Eigen::VectorXd::Zero(n);
  substep_contact_ = Eigen::VectorXd::Zero(bodies);
  pd_contact_ = Eigen::VectorXd::Zero(bodies);
  policy_contact_ = Eigen::VectorXd::Zero(bodies);
}

void Simulator::set_friction(double mu) {
  if (!(mu >= 0.0)) throw ContractViolation("friction coefficient must be >= 0");
  config_.friction_coefficient = mu;
}

void Simulator::load_state(const SimState& state) {
  const std::size_t n = model_->dof();
  require_size(static_cast<std::size_t>(state.q.size()), n, "state.q");
  require_size(static_cast<std::size_t>(state.qd.size()), n, "state.qd");
  require_size(state.failure_mask.size(), n, "state.failure_mask");
  require_finite(state.q, "state.q");
  require_finite(state.qd, "state.qd");
  require_finite(state.root_pose, "state.root_pose");
  require_finite(state.root_vel, "state.root_vel");
  if (root_dof_ == 3) {
    position_.head<3>() = state.root_pose;
    velocity_.head<3>() = state.root_vel;
  }
  position_.tail(static_cast<Eigen::Index>(n)) = state.q;
  velocity_.tail(static_cast<Eigen::Index>(n)) = state.qd;
  failure_mask_ = state.failure_mask;
  time_ = state.sim_time;
}

void Simulator::store_state(SimState& state) const {
  const auto n = static_cast<Eigen::Index>(model_->dof());
  state.q = position_.tail(n);
  state.qd = velocity_.tail(n);
  if (root_dof_ == 3) {
    state.root_pose = position_.head<3>();
    state.root_vel = velocity_.head<3>();
  }
  state.failure_mask = failure_mask_;
  state.sim_time = time_;
}

SimState Simulator::step(const SimState& state, std::span<const double> action,
                         std::span<const PushEvent> pushes, DriveMode mode,
                         const PdObserver& observer) {
  const std::size_t n = model_->dof();
  require_size(action.size(), n, "step action");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(action[j])) {
      throw SimulationFault("action", "entry " + std::to_string(j) + " is not finite");
    }
  }
  push_targets_.clear();
  for (const auto& push : pushes) {
    if (!(push.magnitude >= 0.0) || !(push.duration > 0.0)) {
      throw ContractViolation("push event needs magnitude >= 0 and duration > 0");
    }
    push_targets_.push_back(model_->link_index(push.target_body));
  }
  load_state(state);

  SimState out = state;
  policy_contact_.setZero();
  const int pd_steps = config_.pd_per_policy();
  const int substeps = config_.substeps_per_pd();
  const auto nj = static_cast<Eigen::Index>(n);
  for (int k = 0; k < pd_steps; ++k) {
    if (mode == DriveMode::kZeroTorque) {
      torque_.setZero();
    } else {
      const Eigen::VectorXd q = position_.tail(nj);
      const Eigen::VectorXd qd = velocity_.tail(nj);
      torque_ = pd_torque(action, std::span<const double>(q.data(), n),
                          std::span<const double>(qd.data(), n), gains_,
                          failure_mask_,
                          std::span<const double>(torque_limit_.data(), n));
    }
    pd_contact_.setZero();
    for (int s = 0; s < substeps; ++s) substep(pushes);
    ++counters_.pd_updates;
    if (observer) {
      store_state(out);
      out.contact_forces = pd_contact_;
      tree_.update(position_, velocity_);
      observer(PdSample{out, pd_contact_, torque_, tree_, k});
    }
  }
  ++counters_.steps;
  store_state(out);
  out.contact_forces = policy_contact_;
  return out;
}

void Simulator::substep(std::span<const PushEvent> pushes) {
  tree_.update(position_, velocity_);
  tree_.clear_external_forces();

  for (std::size_t i = 0; i < model_->links.size(); ++i) {
    const Link& link = model_->links[i];
    const LinkFrame& frame = tree_.frame(i);
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    for (const auto& local : link.contact_points) {
      const Eigen::Vector2d p = frame.to_world(local);
      if (!(p.y() < 0.0)) continue;
      const Eigen::Vector2d f =
          contact_point_force(p, frame.velocity_of(local), config_);
      if (f.y() > 0.0 || f.x() != 0.0) tree_.add_point_force(i, local, f);
      total += f;
    }
    const auto b = static_cast<Eigen::Index>(i);
    substep_contact_[b] = total.norm();
    pd_contact_[b] = std::max(pd_contact_[b], substep_contact_[b]);
    policy_contact_[b] = std::max(policy_contact_[b], substep_contact_[b]);
  }

  for (std::size_t k = 0; k < pushes.size(); ++k) {
    const PushEvent& push = pushes[k];
    if (!push.active_at(time_)) continue;
    const std::size_t body = push_targets_[k];
    const Eigen::Vector2d f = push.magnitude * Eigen::Vector2d(std::cos(push.direction),
                                                               std::sin(push.direction));
    tree_.add_point_force(body, model_->links[body].com, f);
  }

  generalized_force_.setZero();
  const std::size_t n = model_->dof();
  for (std::size_t j = 0; j < n; ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    const Eigen::Index g = root_dof_ + i;
    double tau = torque_[i];
    if (config_.joint_limits) {
      const double q = position_[g];
      const double qd = velocity_[g];
      if (q > upper_[i]) {
        tau += -config_.limit_stiffness * (q - upper_[i]) -
               config_.limit_damping * std::max(qd, 0.0);
      } else if (q < lower_[i]) {
        tau += -config_.limit_stiffness * (q - lower_[i]) -
               config_.limit_damping * std::min(qd, 0.0);
      }
    }
    generalized_force_[g] = tau;
  }

  const Eigen::VectorXd& qdd = tree_.forward_dynamics(generalized_force_);
  require_finite(qdd, "qdd");
  velocity_ += config_.substep_dt * qdd;
  position_ += config_.substep_dt * velocity_;
  time_ += config_.substep_dt;
  ++counters_.substeps;
}

SimState step(const SimState& state, std::span<const double> action,
              const SimConfig& config, const RobotModel& model,
              std::span<const PushEvent> pushes) {
  Simulator sim(std::make_shared<const RobotModel>(model), config);
  return sim.step(state, action, pushes);
}

}  // namespace safefall
