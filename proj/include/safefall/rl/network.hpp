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

#ifndef SAFEFALL_RL_NETWORK_HPP_
#define SAFEFALL_RL_NETWORK_HPP_

#include <Eigen/Core>
#include <random>
#include <vector>

namespace safefall {

// Fully connected tanh network with a linear output layer. Parameters live
// in caller-owned flat storage: for each layer W (out x in, column-major)
// followed by b (out).
class Mlp {
 public:
  struct Cache {
    // activations[0] is the input, activations.back() the linear output.
    std::vector<Eigen::MatrixXd> activations;
    const Eigen::MatrixXd& output() const { return activations.back(); }
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int param_count() const { return param_count_; }

  // x holds one sample per column.
  void forward(const double* params, const Eigen::MatrixXd& x, Cache& cache) const;
  // Accumulates dLoss/dparams into grad given dLoss/doutput.
  void backward(const double* params, const Cache& cache, const Eigen::MatrixXd& grad_out,
                double* grad) const;
  // Gaussian weights scaled by gain/sqrt(fan_in), zero biases; the last layer
  // uses out_gain.
  void init(double* params, std::mt19937_64& rng, double gain, double out_gain) const;

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  int param_count_ = 0;
};

struct PolicyShape {
  int obs_dim = 0;
  int act_dim = 0;
  std::vector<int> hidden{256, 128};
  bool operator==(const PolicyShape&) const = default;
};

// Gaussian actor with state-independent log-std and a scalar critic sharing
// one flat parameter vector: [actor | log_std | critic].
class ActorCritic {
 public:
  ActorCritic() = default;
  explicit ActorCritic(PolicyShape shape);

  const PolicyShape& shape() const { return shape_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  int param_count() const { return total_; }
  int log_std_offset() const { return actor_.param_count(); }
  int critic_offset() const { return actor_.param_count() + shape_.act_dim; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Map<const Eigen::VectorXd> log_std() const;

  void init(std::mt19937_64& rng, double initial_log_std = -0.5);

  Eigen::MatrixXd mean(const Eigen::MatrixXd& obs) const;
  Eigen::VectorXd value(const Eigen::MatrixXd& obs) const;

  struct Sample {
    Eigen::VectorXd action;
    double log_prob = 0.0;
    double value = 0.0;
  };
  Sample act(const Eigen::VectorXd& obs, std::mt19937_64& rng, bool deterministic) const;

 private:
  PolicyShape shape_;
  Mlp actor_;
  Mlp critic_;
  int total_ = 0;
  Eigen::VectorXd params_;
};

// Sum over dimensions of the diagonal Gaussian log density.
double gaussian_log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std);
double gaussian_entropy(const Eigen::VectorXd& log_std);

}  // namespace safefall

#endif  // SAFEFALL_RL_NETWORK_HPP_
