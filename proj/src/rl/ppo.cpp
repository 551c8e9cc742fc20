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

#include "safefall/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "safefall/error.hpp"

namespace safefall {

void validate_ppo_config(const PPOConfig& c) {
  auto fail = [](const std::string& field, const std::string& rule) {
    throw ValidationError("ppo." + field + " " + rule);
  };
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) fail("gamma", "must be in (0, 1]");
  if (!(c.lambda > 0.0 && c.lambda <= 1.0)) fail("lambda", "must be in (0, 1]");
  if (!(c.clip > 0.0)) fail("clip", "must be > 0");
  if (c.epochs <= 0) fail("epochs", "must be > 0");
  if (c.minibatches <= 0) fail("minibatches", "must be > 0");
  if (!(c.learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(c.entropy_coef >= 0.0)) fail("entropy_coef", "must be >= 0");
  if (!(c.value_coef >= 0.0)) fail("value_coef", "must be >= 0");
  if (!(c.max_grad_norm > 0.0)) fail("max_grad_norm", "must be > 0");
  if (c.num_envs <= 0) fail("num_envs", "must be > 0");
  if (c.horizon <= 0) fail("horizon", "must be > 0");
  if (c.total_steps <= 0) fail("total_steps", "must be > 0");
  if (c.num_envs * c.horizon < c.minibatches) {
    fail("minibatches", "must not exceed num_envs * horizon");
  }
  for (int h : c.hidden) {
    if (h <= 0) fail("hidden", "sizes must be > 0");
  }
  if (!std::isfinite(c.initial_log_std)) fail("initial_log_std", "must be finite");
}

void Trajectory::clear() {
  observations.clear();
  actions.clear();
  log_probs.clear();
  rewards.clear();
  values.clear();
  dones.clear();
  breakdowns.clear();
}

Advantages gae_advantages(const Trajectory& tr, double gamma, double lambda,
                          double bootstrap_value) {
  const std::size_t n = tr.size();
  if (n == 0) throw ContractViolation("gae needs a non-empty trajectory");
  require_size(tr.values.size(), n, "gae values");
  require_size(tr.dones.size(), n, "gae dones");
  Advantages out;
  out.advantages.resize(static_cast<Eigen::Index>(n));
  out.returns.resize(static_cast<Eigen::Index>(n));
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = tr.dones[k] ? 0.0 : 1.0;
    const double delta = tr.rewards[k] + gamma * next_value * live - tr.values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    const auto i = static_cast<Eigen::Index>(k);
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + tr.values[k];
    next_value = tr.values[k];
  }
  return out;
}

Batch Batch::select(const std::vector<Eigen::Index>& columns) const {
  Batch out;
  const auto n = static_cast<Eigen::Index>(columns.size());
  out.observations.resize(observations.rows(), n);
  out.actions.resize(actions.rows(), n);
  out.log_probs.resize(n);
  out.advantages.resize(n);
  out.returns.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index c = columns[static_cast<std::size_t>(k)];
    out.observations.col(k) = observations.col(c);
    out.actions.col(k) = actions.col(c);
    out.log_probs[k] = log_probs[c];
    out.advantages[k] = advantages[c];
    out.returns[k] = returns[c];
  }
  return out;
}

LossStats ppo_loss_and_gradient(const ActorCritic& policy, const Batch& batch,
                                const PPOConfig& config, Eigen::VectorXd& grad) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ContractViolation("empty PPO batch");
  const int act = policy.shape().act_dim;
  grad = Eigen::VectorXd::Zero(policy.param_count());
  const double* params = policy.params().data();
  const Eigen::VectorXd log_std = policy.log_std();
  const Eigen::ArrayXd inv_std = (-log_std.array()).exp();

  Mlp::Cache actor_cache;
  policy.actor().forward(params, batch.observations, actor_cache);
  const Eigen::MatrixXd& mean = actor_cache.output();

  LossStats stats;
  Eigen::MatrixXd grad_mean(act, n);
  Eigen::VectorXd grad_log_std = Eigen::VectorXd::Zero(act);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double half_log_2pi = 0.91893853320467274178;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::ArrayXd z =
        (batch.actions.col(i) - mean.col(i)).array() * inv_std;
    const double log_prob =
        (-0.5 * z.square() - log_std.array() - half_log_2pi).sum();
    const double log_ratio = log_prob - batch.log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    const double surr1 = ratio * adv;
    const double surr2 = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip) * adv;
    stats.policy_loss -= std::min(surr1, surr2) * inv_n;
    stats.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    if (std::abs(ratio - 1.0) > config.clip) stats.clip_fraction += inv_n;
    const double d_log_prob = surr1 <= surr2 ? -adv * ratio * inv_n : 0.0;
    grad_mean.col(i) = d_log_prob * (z * inv_std).matrix();
    grad_log_std += d_log_prob * (z.square() - 1.0).matrix();
  }
  stats.entropy = gaussian_entropy(log_std);
  grad_log_std.array() -= config.entropy_coef;
  policy.actor().backward(params, actor_cache, grad_mean, grad.data());
  grad.segment(policy.log_std_offset(), act) += grad_log_std;

  Mlp::Cache critic_cache;
  const double* critic_params = params + policy.critic_offset();
  policy.critic().forward(critic_params, batch.observations, critic_cache);
  const Eigen::RowVectorXd error = critic_cache.output().row(0) - batch.returns.transpose();
  stats.value_loss = 0.5 * error.squaredNorm() * inv_n;
  const Eigen::MatrixXd grad_value = (config.value_coef * inv_n) * error;
  policy.critic().backward(critic_params, critic_cache, grad_value,
                           grad.data() + policy.critic_offset());

  stats.total = stats.policy_loss - config.entropy_coef * stats.entropy +
                config.value_coef * stats.value_loss;
  return stats;
}

PpoLearner::PpoLearner(ActorCritic& policy, PPOConfig config)
    : policy_(&policy),
      config_(std::move(config)),
      m_(Eigen::VectorXd::Zero(policy.param_count())),
      v_(Eigen::VectorXd::Zero(policy.param_count())) {}

void PpoLearner::restore_optimizer(Eigen::VectorXd m, Eigen::VectorXd v, std::int64_t t) {
  require_size(static_cast<std::size_t>(m.size()),
               static_cast<std::size_t>(policy_->param_count()), "adam m");
  require_size(static_cast<std::size_t>(v.size()),
               static_cast<std::size_t>(policy_->param_count()), "adam v");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

UpdateStats PpoLearner::update(Batch batch, std::mt19937_64& rng) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ContractViolation("empty PPO batch");
  const double adv_mean = batch.advantages.mean();
  const double adv_std =
      std::sqrt((batch.advantages.array() - adv_mean).square().mean() + 1e-8);
  batch.advantages = (batch.advantages.array() - adv_mean) / adv_std;

  const Eigen::VectorXd snapshot = policy_->params();
  const Eigen::VectorXd m_snapshot = m_, v_snapshot = v_;
  const std::int64_t t_snapshot = t_;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index per = n / config_.minibatches;
  UpdateStats stats;
  Eigen::VectorXd grad;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int mb = 0; mb < config_.minibatches; ++mb) {
      const auto begin = order.begin() + mb * per;
      const auto end = mb + 1 == config_.minibatches ? order.end() : begin + per;
      const Batch minibatch = batch.select(std::vector<Eigen::Index>(begin, end));
      const LossStats loss = ppo_loss_and_gradient(*policy_, minibatch, config_, grad);
      double norm = grad.norm();
      if (!std::isfinite(loss.total) || !std::isfinite(norm)) {
        policy_->params() = snapshot;
        m_ = m_snapshot;
        v_ = v_snapshot;
        t_ = t_snapshot;
        std::ostringstream msg;
        msg << "non-finite PPO update (epoch " << epoch << ", minibatch " << mb
            << "): loss=" << loss.total << " policy=" << loss.policy_loss
            << " value=" << loss.value_loss << " grad_norm=" << norm;
        throw UpdateFault(msg.str());
      }
      stats.grad_norm += norm;
      if (norm > config_.max_grad_norm) {
        grad *= config_.max_grad_norm / norm;
      }
      ++t_;
      m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
      v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
      policy_->params().array() -=
          config_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);

      stats.loss.total += loss.total;
      stats.loss.policy_loss += loss.policy_loss;
      stats.loss.value_loss += loss.value_loss;
      stats.loss.entropy += loss.entropy;
      stats.loss.approx_kl += loss.approx_kl;
      stats.loss.clip_fraction += loss.clip_fraction;
      ++stats.minibatch_updates;
    }
  }
  const double k = 1.0 / stats.minibatch_updates;
  stats.loss.total *= k;
  stats.loss.policy_loss *= k;
  stats.loss.value_loss *= k;
  stats.loss.entropy *= k;
  stats.loss.approx_kl *= k;
  stats.loss.clip_fraction *= k;
  stats.grad_norm *= k;
  return stats;
}

}  // namespace safefall
