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

#include "safefall/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safefall/error.hpp"

namespace safefall {

namespace {

void same_length(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 const char* what) {
  require_size(static_cast<std::size_t>(a.size()), static_cast<std::size_t>(b.size()),
               what);
}

}  // namespace

std::string_view to_string(RewardVariant variant) {
  return variant == RewardVariant::kAsWritten ? "as_written" : "corrected";
}

RewardVariant reward_variant_from_string(std::string_view name) {
  if (name == "as_written") return RewardVariant::kAsWritten;
  if (name == "corrected") return RewardVariant::kCorrected;
  throw ValidationError("unknown reward variant '" + std::string(name) +
                        "' (expected as_written or corrected)");
}

std::array<double, kRewardTermCount> RewardWeights::as_array() const {
  return {root_lin_vel,      critical_contact, all_contact,
          actuation_impulse, dof_pos_limit,    torque_limit,
          torque_magnitude,  action_rate,      dof_accel};
}

double& RewardWeights::operator[](std::size_t term) {
  switch (term) {
    case kRootLinVel: return root_lin_vel;
    case kCriticalContact: return critical_contact;
    case kAllContact: return all_contact;
    case kActuationImpulse: return actuation_impulse;
    case kDofPosLimit: return dof_pos_limit;
    case kTorqueLimit: return torque_limit;
    case kTorqueMagnitude: return torque_magnitude;
    case kActionRate: return action_rate;
    case kDofAccel: return dof_accel;
    default: break;
  }
  throw ContractViolation("reward term index out of range");
}

void validate_reward_weights(const RewardWeights& weights) {
  const auto values = weights.as_array();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k]) || values[k] > 0.0) {
      throw ValidationError("reward.weights." + std::string(kRewardTermNames[k]) +
                            " must be finite and <= 0");
    }
  }
}

double term_root_lin_vel(const Eigen::Vector2d& v_root) {
  return v_root.squaredNorm();
}

double term_critical_contact(const Eigen::VectorXd& c_cb, RewardVariant variant) {
  const double norm = c_cb.norm();
  return variant == RewardVariant::kAsWritten ? std::max(norm, 10.0)
                                              : std::min(norm, 10.0);
}

double term_all_contact(const Eigen::VectorXd& w_bodies,
                        const Eigen::VectorXd& c_bodies) {
  same_length(w_bodies, c_bodies, "all_contact weights");
  return w_bodies.cwiseProduct(c_bodies).squaredNorm();
}

double term_actuation_impulse(const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                              const Eigen::VectorXd& q_l,
                              const Eigen::VectorXd& q_u) {
  same_length(q, qd, "actuation_impulse qd");
  same_length(q, q_l, "actuation_impulse q_l");
  same_length(q, q_u, "actuation_impulse q_u");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    if (q[j] >= q_u[j]) {
      const double v = std::max(qd[j], 0.0);
      sum += v * v;
    }
    if (q[j] <= q_l[j]) {
      const double v = std::min(qd[j], 0.0);
      sum += v * v;
    }
  }
  return sum;
}

double term_dof_pos_limit(const Eigen::VectorXd& q, const Eigen::VectorXd& q_l,
                          const Eigen::VectorXd& q_u) {
  same_length(q, q_l, "dof_pos_limit q_l");
  same_length(q, q_u, "dof_pos_limit q_u");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    sum += -std::min(q[j] - q_l[j], 0.0) + std::max(q[j] - q_u[j], 0.0);
  }
  return sum;
}

double term_torque_limit(const Eigen::VectorXd& tau, const Eigen::VectorXd& tau_u,
                         RewardVariant variant) {
  same_length(tau, tau_u, "torque_limit tau_u");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < tau.size(); ++j) {
    const double margin = std::abs(tau[j]) / tau_u[j] - 0.95;
    sum += variant == RewardVariant::kAsWritten ? std::min(margin, 0.0)
                                                : std::max(margin, 0.0);
  }
  return sum;
}

double term_torque_magnitude(const Eigen::VectorXd& tau) { return tau.squaredNorm(); }

double term_action_rate(const Eigen::VectorXd& a_t, const Eigen::VectorXd& a_prev) {
  same_length(a_t, a_prev, "action_rate a_prev");
  return (a_t - a_prev).norm();
}

double term_dof_accel(const Eigen::VectorXd& qd, const Eigen::VectorXd& qd_prev) {
  same_length(qd, qd_prev, "dof_accel qd_prev");
  return (qd - qd_prev).squaredNorm();
}

RewardBreakdown compute_reward(const RewardInputs& in, const RewardWeights& weights,
                               RewardVariant variant) {
  same_length(in.w_bodies, in.c_bodies, "reward w_bodies");
  for (const Eigen::VectorXd* v :
       {&in.qd, &in.qd_prev, &in.tau, &in.a_t, &in.a_prev, &in.q_l, &in.q_u, &in.tau_u}) {
    same_length(in.q, *v, "reward joint vector");
  }
  RewardBreakdown out;
  out.terms[kRootLinVel].raw = term_root_lin_vel(in.v_root);
  out.terms[kCriticalContact].raw = term_critical_contact(in.c_cb, variant);
  out.terms[kAllContact].raw = term_all_contact(in.w_bodies, in.c_bodies);
  out.terms[kActuationImpulse].raw =
      term_actuation_impulse(in.q, in.qd, in.q_l, in.q_u);
  out.terms[kDofPosLimit].raw = term_dof_pos_limit(in.q, in.q_l, in.q_u);
  out.terms[kTorqueLimit].raw = term_torque_limit(in.tau, in.tau_u, variant);
  out.terms[kTorqueMagnitude].raw = term_torque_magnitude(in.tau);
  out.terms[kActionRate].raw = term_action_rate(in.a_t, in.a_prev);
  out.terms[kDofAccel].raw = term_dof_accel(in.qd, in.qd_prev);
  const auto w = weights.as_array();
  for (std::size_t k = 0; k < kRewardTermCount; ++k) {
    out.terms[k].weighted = w[k] * out.terms[k].raw;
    out.total += out.terms[k].weighted;
  }
  return out;
}

}  // namespace safefall
