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

#include "safefall/rl/network.hpp"

#include <cmath>
#include <numbers>

#include "safefall/error.hpp"

namespace safefall {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 log(2 pi)

}  // namespace

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ContractViolation("Mlp needs input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw ContractViolation("Mlp layer sizes must be > 0");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(param_count_);
    param_count_ += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
}

void Mlp::forward(const double* params, const Eigen::MatrixXd& x, Cache& cache) const {
  if (x.rows() != sizes_.front()) throw ContractViolation("Mlp input size mismatch");
  const std::size_t layers = sizes_.size() - 1;
  cache.activations.resize(layers + 1);
  cache.activations[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    Eigen::Map<const Eigen::MatrixXd> w(params + offsets_[l], out, in);
    Eigen::Map<const Eigen::VectorXd> b(params + offsets_[l] + out * in, out);
    Eigen::MatrixXd& z = cache.activations[l + 1];
    z.noalias() = w * cache.activations[l];
    z.colwise() += b;
    if (l + 1 < layers) z = z.array().tanh().matrix();
  }
}

void Mlp::backward(const double* params, const Cache& cache,
                   const Eigen::MatrixXd& grad_out, double* grad) const {
  const std::size_t layers = sizes_.size() - 1;
  Eigen::MatrixXd delta = grad_out;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    Eigen::Map<const Eigen::MatrixXd> w(params + offsets_[l], out, in);
    Eigen::Map<Eigen::MatrixXd> gw(grad + offsets_[l], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad + offsets_[l] + out * in, out);
    const Eigen::MatrixXd& a = cache.activations[l];
    gw.noalias() += delta * a.transpose();
    gb += delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd next = w.transpose() * delta;
      delta = next.array() * (1.0 - a.array().square());
    }
  }
}

void Mlp::init(double* params, std::mt19937_64& rng, double gain, double out_gain) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double scale = (l + 1 == layers ? out_gain : gain) / std::sqrt(in);
    double* w = params + offsets_[l];
    for (int k = 0; k < out * in; ++k) w[k] = scale * normal(rng);
    for (int k = 0; k < out; ++k) w[out * in + k] = 0.0;
  }
}

ActorCritic::ActorCritic(PolicyShape shape) : shape_(std::move(shape)) {
  if (shape_.obs_dim <= 0 || shape_.act_dim <= 0) {
    throw ContractViolation("policy needs positive observation and action sizes");
  }
  std::vector<int> a{shape_.obs_dim}, c{shape_.obs_dim};
  for (int h : shape_.hidden) {
    a.push_back(h);
    c.push_back(h);
  }
  a.push_back(shape_.act_dim);
  c.push_back(1);
  actor_ = Mlp(a);
  critic_ = Mlp(c);
  total_ = actor_.param_count() + shape_.act_dim + critic_.param_count();
  params_ = Eigen::VectorXd::Zero(total_);
}

Eigen::Map<const Eigen::VectorXd> ActorCritic::log_std() const {
  return Eigen::Map<const Eigen::VectorXd>(params_.data() + log_std_offset(),
                                           shape_.act_dim);
}

void ActorCritic::init(std::mt19937_64& rng, double initial_log_std) {
  actor_.init(params_.data(), rng, std::sqrt(2.0), 0.01);
  params_.segment(log_std_offset(), shape_.act_dim).setConstant(initial_log_std);
  critic_.init(params_.data() + critic_offset(), rng, std::sqrt(2.0), 1.0);
}

Eigen::MatrixXd ActorCritic::mean(const Eigen::MatrixXd& obs) const {
  Mlp::Cache cache;
  actor_.forward(params_.data(), obs, cache);
  return cache.output();
}

Eigen::VectorXd ActorCritic::value(const Eigen::MatrixXd& obs) const {
  Mlp::Cache cache;
  critic_.forward(params_.data() + critic_offset(), obs, cache);
  return cache.output().row(0).transpose();
}

ActorCritic::Sample ActorCritic::act(const Eigen::VectorXd& obs, std::mt19937_64& rng,
                                     bool deterministic) const {
  Sample out;
  const Eigen::VectorXd mu = mean(obs).col(0);
  const Eigen::VectorXd ls = log_std();
  out.action = mu;
  if (!deterministic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      out.action[j] += std::exp(ls[j]) * normal(rng);
    }
  }
  out.log_prob = gaussian_log_prob(out.action, mu, ls);
  out.value = value(obs)[0];
  return out;
}

double gaussian_log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < action.size(); ++j) {
    const double z = (action[j] - mean[j]) * std::exp(-log_std[j]);
    sum += -0.5 * z * z - log_std[j] - kHalfLog2Pi;
  }
  return sum;
}

double gaussian_entropy(const Eigen::VectorXd& log_std) {
  return (log_std.array() + 0.5 + kHalfLog2Pi).sum();
}

}  // namespace safefall
