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

#include "safefall/rl/normalizer.hpp"

#include <cmath>

#include "safefall/error.hpp"

namespace safefall {

namespace {
constexpr double kEpsilon = 1e-8;
}  // namespace

RunningNormalizer::RunningNormalizer(int size, double clip)
    : mean_(Eigen::VectorXd::Zero(size)), var_(Eigen::VectorXd::Ones(size)), clip_(clip) {}

void RunningNormalizer::update(const Eigen::MatrixXd& batch) {
  if (batch.rows() != mean_.size()) throw ContractViolation("normalizer size mismatch");
  if (batch.cols() == 0) return;
  const double n = static_cast<double>(batch.cols());
  const Eigen::VectorXd batch_mean = batch.rowwise().mean();
  const Eigen::VectorXd batch_var =
      (batch.colwise() - batch_mean).array().square().rowwise().sum() / n;
  const double total = count_ + n;
  const Eigen::VectorXd delta = batch_mean - mean_;
  mean_ += delta * (n / total);
  const Eigen::VectorXd m2 = var_ * count_ + batch_var * n +
                             delta.array().square().matrix() * (count_ * n / total);
  var_ = m2 / total;
  count_ = total;
}

Eigen::VectorXd RunningNormalizer::normalize(const Eigen::VectorXd& x) const {
  return normalize(Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd RunningNormalizer::normalize(const Eigen::MatrixXd& batch) const {
  const Eigen::ArrayXd inv_std = (var_.array() + kEpsilon).rsqrt();
  Eigen::MatrixXd out = batch.colwise() - mean_;
  out = (out.array().colwise() * inv_std).max(-clip_).min(clip_).matrix();
  return out;
}

void RunningNormalizer::restore(Eigen::VectorXd mean, Eigen::VectorXd var, double count,
                                double clip) {
  if (mean.size() != var.size()) throw ContractViolation("normalizer restore mismatch");
  mean_ = std::move(mean);
  var_ = std::move(var);
  count_ = count;
  clip_ = clip;
}

}  // namespace safefall
