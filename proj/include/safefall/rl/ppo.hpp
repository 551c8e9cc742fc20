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

#ifndef SAFEFALL_RL_PPO_HPP_
#define SAFEFALL_RL_PPO_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <vector>

#include "safefall/reward/reward.hpp"
#include "safefall/rl/network.hpp"

namespace safefall {

struct PPOConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double learning_rate = 3e-4;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 1.0;
  int num_envs = 1024;
  int horizon = 24;
  std::int64_t total_steps = 20'000'000;
  std::vector<int> hidden{256, 128};
  double initial_log_std = -0.5;
  bool normalize_observations = true;
  bool normalize_rewards = true;

  bool operator==(const PPOConfig&) const = default;
};

// Throws ValidationError naming the offending field.
void validate_ppo_config(const PPOConfig& config);

// One environment's consecutive steps. done[t] marks the last step of an
// episode; the reward of a truncated final step already includes the
// discounted bootstrap value.
struct Trajectory {
  std::vector<Eigen::VectorXd> observations;
  std::vector<Eigen::VectorXd> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<bool> dones;
  std::vector<RewardBreakdown> breakdowns;

  std::size_t size() const { return rewards.size(); }
  void clear();
};

struct Advantages {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t,
// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}, R_t = A_t + V_t.
// bootstrap_value stands in for V_T after the last step.
Advantages gae_advantages(const Trajectory& trajectory, double gamma, double lambda,
                          double bootstrap_value);

struct Batch {
  Eigen::MatrixXd observations;  // obs_dim x n
  Eigen::MatrixXd actions;       // act_dim x n
  Eigen::VectorXd log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  Eigen::Index size() const { return log_probs.size(); }
  Batch select(const std::vector<Eigen::Index>& columns) const;
};

struct LossStats {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Clipped surrogate with entropy bonus and value loss:
// L = -mean(min(r A, clip(r) A)) - c_e H + c_v 0.5 mean((V - R)^2).
// Writes dL/dparams into grad (resized to param_count).
LossStats ppo_loss_and_gradient(const ActorCritic& policy, const Batch& batch,
                                const PPOConfig& config, Eigen::VectorXd& grad);

struct UpdateStats {
  LossStats loss;  // averaged over minibatches
  double grad_norm = 0.0;
  int minibatch_updates = 0;
};

class PpoLearner {
 public:
  PpoLearner(ActorCritic& policy, PPOConfig config);

  // Normalizes advantages over the whole batch, then runs epochs x
  // minibatches Adam steps. On a non-finite loss or gradient the policy is
  // restored and UpdateFault is thrown.
  UpdateStats update(Batch batch, std::mt19937_64& rng);

  const Eigen::VectorXd& adam_m() const { return m_; }
  const Eigen::VectorXd& adam_v() const { return v_; }
  std::int64_t adam_t() const { return t_; }
  void restore_optimizer(Eigen::VectorXd m, Eigen::VectorXd v, std::int64_t t);

 private:
  ActorCritic* policy_;
  PPOConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::int64_t t_ = 0;
};

}  // namespace safefall

#endif  // SAFEFALL_RL_PPO_HPP_
