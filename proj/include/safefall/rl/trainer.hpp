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

#ifndef SAFEFALL_RL_TRAINER_HPP_
#define SAFEFALL_RL_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "safefall/rl/checkpoint.hpp"
#include "safefall/rl/env.hpp"
#include "safefall/rl/ppo.hpp"

namespace safefall {

struct TrainJob {
  EnvSpec env;
  PPOConfig ppo;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  // Iterations between checkpoints; the final iteration always writes one.
  int checkpoint_every = 10;
  int workers = 1;
  // Stored verbatim in every checkpoint.
  std::string config_json;
  // Deterministic evaluation cadence in iterations (0 = never).
  int eval_every = 0;
  int eval_episodes = 10;
  // Stop once an evaluation reaches this mean return.
  std::optional<double> stop_at_return;
  std::optional<std::filesystem::path> resume_from;
};

struct TrainResult {
  std::int64_t steps = 0;
  std::int64_t iterations = 0;
  std::vector<std::pair<std::int64_t, double>> evaluations;  // (step, mean return)
  std::optional<std::int64_t> solved_at;
  std::filesystem::path last_checkpoint;
};

// Writes <out_dir>/metrics.ndjson (one record per iteration) and
// <out_dir>/checkpoints/{iter_NNNNNN,latest}.ckpt. Deterministic given the
// job and seed; worker count does not change results. Simulation and update
// faults append a diagnostic record and are rethrown.
TrainResult train(const TrainJob& job);

// Mean-action rollouts of `episodes` fresh environments seeded from `seed`.
std::vector<double> evaluate_policy(const ActorCritic& policy,
                                    const RunningNormalizer* normalizer,
                                    const EnvSpec& spec, int episodes, std::uint64_t seed);

}  // namespace safefall

#endif  // SAFEFALL_RL_TRAINER_HPP_
