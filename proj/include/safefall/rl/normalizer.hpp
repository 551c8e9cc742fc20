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

#ifndef SAFEFALL_RL_NORMALIZER_HPP_
#define SAFEFALL_RL_NORMALIZER_HPP_

#include <Eigen/Core>

namespace safefall {

// Running mean and variance merged batch by batch (Chan et al. update).
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  RunningNormalizer(int size, double clip);

  int size() const { return static_cast<int>(mean_.size()); }
  // One sample per column.
  void update(const Eigen::MatrixXd& batch);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& batch) const;

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& var() const { return var_; }
  double count() const { return count_; }
  double clip() const { return clip_; }
  void restore(Eigen::VectorXd mean, Eigen::VectorXd var, double count, double clip);

  bool operator==(const RunningNormalizer&) const = default;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd var_;
  double count_ = 1e-4;
  double clip_ = 5.0;
};

}  // namespace safefall

#endif  // SAFEFALL_RL_NORMALIZER_HPP_
