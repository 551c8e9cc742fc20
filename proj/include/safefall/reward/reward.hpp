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

#ifndef SAFEFALL_REWARD_REWARD_HPP_
#define SAFEFALL_REWARD_REWARD_HPP_

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <string_view>

namespace safefall {

// Rows 2 and 6 of the reward table exist in two forms. kAsWritten evaluates
// max(|c_cb|, 10) and min(|tau|/tau_u - 0.95, 0); kCorrected swaps min and
// max so both terms vanish away from contact and below the torque margin.
enum class RewardVariant { kAsWritten, kCorrected };

std::string_view to_string(RewardVariant variant);
RewardVariant reward_variant_from_string(std::string_view name);  // throws

enum RewardTermId : std::size_t {
  kRootLinVel = 0,
  kCriticalContact,
  kAllContact,
  kActuationImpulse,
  kDofPosLimit,
  kTorqueLimit,
  kTorqueMagnitude,
  kActionRate,
  kDofAccel,
  kRewardTermCount,
};

// Names used in config files and the metrics log, indexed by RewardTermId.
inline constexpr std::array<std::string_view, kRewardTermCount> kRewardTermNames{
    "root_lin_vel",     "critical_contact", "all_contact",
    "actuation_impulse", "dof_pos_limit",   "torque_limit",
    "torque_magnitude", "action_rate",      "dof_accel"};

struct RewardWeights {
  double root_lin_vel = -1.03125;
  double critical_contact = -0.02;
  double all_contact = -0.001;
  double actuation_impulse = -7.25;
  double dof_pos_limit = -29.0;
  double torque_limit = -24.65;
  double torque_magnitude = -2.9e-3;
  double action_rate = -(2.0 / 3.0) * 1e-2;
  double dof_accel = -2e-4;

  std::array<double, kRewardTermCount> as_array() const;
  double& operator[](std::size_t term);
  bool operator==(const RewardWeights&) const = default;
};

// Throws ValidationError if any weight is positive or non-finite.
void validate_reward_weights(const RewardWeights& weights);

struct RewardInputs {
  Eigen::Vector2d v_root = Eigen::Vector2d::Zero();
  Eigen::VectorXd c_bodies;  // per body
  Eigen::VectorXd c_cb;      // critical bodies only
  Eigen::VectorXd w_bodies;  // per body
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  Eigen::VectorXd qd_prev;
  Eigen::VectorXd tau;
  Eigen::VectorXd a_t;
  Eigen::VectorXd a_prev;
  Eigen::VectorXd q_l;
  Eigen::VectorXd q_u;
  Eigen::VectorXd tau_u;
};

struct RewardTerm {
  double raw = 0.0;
  double weighted = 0.0;
};

struct RewardBreakdown {
  std::array<RewardTerm, kRewardTermCount> terms{};
  double total = 0.0;

  const RewardTerm& operator[](std::size_t term) const { return terms[term]; }
};

// One function per table row, each returning the raw (unweighted) value.
double term_root_lin_vel(const Eigen::Vector2d& v_root);
double term_critical_contact(const Eigen::VectorXd& c_cb, RewardVariant variant);
double term_all_contact(const Eigen::VectorXd& w_bodies,
                        const Eigen::VectorXd& c_bodies);
double term_actuation_impulse(const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                              const Eigen::VectorXd& q_l,
                              const Eigen::VectorXd& q_u);
double term_dof_pos_limit(const Eigen::VectorXd& q, const Eigen::VectorXd& q_l,
                          const Eigen::VectorXd& q_u);
double term_torque_limit(const Eigen::VectorXd& tau, const Eigen::VectorXd& tau_u,
                         RewardVariant variant);
double term_torque_magnitude(const Eigen::VectorXd& tau);
double term_action_rate(const Eigen::VectorXd& a_t, const Eigen::VectorXd& a_prev);
double term_dof_accel(const Eigen::VectorXd& qd, const Eigen::VectorXd& qd_prev);

// Evaluates all nine rows. Throws ContractViolation on inconsistent lengths.
RewardBreakdown compute_reward(const RewardInputs& inputs,
                               const RewardWeights& weights,
                               RewardVariant variant = RewardVariant::kCorrected);

}  // namespace safefall

#endif  // SAFEFALL_REWARD_REWARD_HPP_
