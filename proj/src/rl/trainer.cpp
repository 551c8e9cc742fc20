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

#include "safefall/rl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "nlohmann/json.hpp"
#include "safefall/error.hpp"
#include "safefall/parallel.hpp"
#include "safefall/seed.hpp"

namespace safefall {

namespace {

using json = nlohmann::json;

std::string iteration_name(std::int64_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "iter_%06lld.ckpt", static_cast<long long>(iteration));
  return buf;
}

void append_line(const std::filesystem::path& path, const json& record) {
  std::ofstream out(path, std::ios::app);
  out << record.dump() << '\n';
}

struct EpisodeTracker {
  double ret = 0.0;
  int length = 0;
  double discounted = 0.0;  // running return for reward scaling
};

}  // namespace

std::vector<double> evaluate_policy(const ActorCritic& policy,
                                    const RunningNormalizer* normalizer,
                                    const EnvSpec& spec, int episodes, std::uint64_t seed) {
  std::vector<double> returns;
  for (int k = 0; k < episodes; ++k) {
    auto env = make_env(spec);
    env->set_progress(1.0);
    std::mt19937_64 rng(derive_seed(seed, kSeedEval, static_cast<std::uint64_t>(k)));
    Eigen::VectorXd obs = env->reset(rng);
    double total = 0.0;
    for (;;) {
      const Eigen::VectorXd input = normalizer ? normalizer->normalize(obs) : obs;
      const EnvStep step = env->step(policy.mean(input).col(0));
      total += step.reward;
      obs = step.observation;
      if (step.done) break;
    }
    returns.push_back(total);
  }
  return returns;
}

TrainResult train(const TrainJob& job) {
  validate_ppo_config(job.ppo);
  validate_task_settings(job.env.task);
  const PPOConfig& cfg = job.ppo;
  const int num_envs = cfg.num_envs;
  const std::filesystem::path ckpt_dir = job.out_dir / "checkpoints";
  std::filesystem::create_directories(ckpt_dir);
  const std::filesystem::path metrics_path = job.out_dir / "metrics.ndjson";

  std::vector<std::unique_ptr<Env>> envs;
  for (int i = 0; i < num_envs; ++i) envs.push_back(make_env(job.env));
  const int obs_dim = envs[0]->observation_size();
  const int act_dim = envs[0]->action_size();

  ActorCritic policy(PolicyShape{obs_dim, act_dim, cfg.hidden});
  {
    std::mt19937_64 init_rng(derive_seed(job.seed, kSeedPolicyInit, 0));
    policy.init(init_rng, cfg.initial_log_std);
  }
  PpoLearner learner(policy, cfg);
  RunningNormalizer obs_norm(obs_dim, 5.0);
  RunningNormalizer ret_norm(1, 1e9);
  std::int64_t global_step = 0;
  std::int64_t iteration = 0;

  if (job.resume_from) {
    Checkpoint c = read_checkpoint(*job.resume_from);
    if (!(c.shape == policy.shape()) || c.task != job.env.task.task) {
      throw ValidationError("checkpoint '" + job.resume_from->string() +
                            "' does not match the configured task and network");
    }
    policy.params() = c.params;
    learner.restore_optimizer(c.adam_m, c.adam_v, c.adam_t);
    obs_norm = c.observation_normalizer;
    ret_norm = c.return_normalizer;
    global_step = c.global_step;
    iteration = c.iteration;
  } else {
    std::filesystem::remove(metrics_path);
  }

  std::vector<std::mt19937_64> env_rngs;
  for (int i = 0; i < num_envs; ++i) {
    // Resumed runs draw fresh episodes keyed on the resume iteration.
    env_rngs.emplace_back(derive_seed(job.seed, kSeedEnv,
                                      static_cast<std::uint64_t>(iteration * num_envs + i)));
  }

  TrainResult result;
  auto make_checkpoint = [&](double p) {
    Checkpoint c;
    c.config_json = job.config_json;
    c.task = job.env.task.task;
    c.action_scale = job.env.task.action_scale;
    c.shape = policy.shape();
    c.params = policy.params();
    c.adam_m = learner.adam_m();
    c.adam_v = learner.adam_v();
    c.adam_t = learner.adam_t();
    c.normalize_observations = cfg.normalize_observations;
    c.observation_normalizer = obs_norm;
    c.normalize_rewards = cfg.normalize_rewards;
    c.return_normalizer = ret_norm;
    c.global_step = global_step;
    c.iteration = iteration;
    c.progress = p;
    c.seed = job.seed;
    return c;
  };

  double p = progress(global_step, cfg.total_steps);
  for (int i = 0; i < num_envs; ++i) envs[static_cast<std::size_t>(i)]->set_progress(p);
  std::vector<Eigen::VectorXd> current(static_cast<std::size_t>(num_envs));
  parallel_for(static_cast<std::size_t>(num_envs), job.workers,
               [&](std::size_t i) { current[i] = envs[i]->reset(env_rngs[i]); });
  std::vector<EpisodeTracker> trackers(static_cast<std::size_t>(num_envs));
  std::vector<Trajectory> trajectories(static_cast<std::size_t>(num_envs));
  std::vector<EnvStep> steps(static_cast<std::size_t>(num_envs));
  const double reward_eps = 1e-8;

  while (global_step < cfg.total_steps) {
    p = progress(global_step, cfg.total_steps);
    for (auto& env : envs) env->set_progress(p);
    std::mt19937_64 sample_rng(
        derive_seed(job.seed, kSeedSampling, static_cast<std::uint64_t>(iteration)));
    std::mt19937_64 minibatch_rng(
        derive_seed(job.seed, kSeedMinibatch, static_cast<std::uint64_t>(iteration)));
    for (auto& t : trajectories) t.clear();
    Eigen::MatrixXd raw_obs(obs_dim, static_cast<Eigen::Index>(num_envs) * cfg.horizon);
    std::array<double, kRewardTermCount> term_sums{};
    double reward_sum = 0.0;
    std::vector<double> episode_returns;
    std::vector<int> episode_lengths;
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::VectorXd log_std = policy.log_std();

    try {
      for (int t = 0; t < cfg.horizon; ++t) {
        Eigen::MatrixXd obs(obs_dim, num_envs);
        for (int i = 0; i < num_envs; ++i) {
          obs.col(i) = current[static_cast<std::size_t>(i)];
          raw_obs.col(static_cast<Eigen::Index>(t) * num_envs + i) = obs.col(i);
        }
        if (cfg.normalize_observations) obs = obs_norm.normalize(obs);
        const Eigen::MatrixXd mean = policy.mean(obs);
        const Eigen::VectorXd values = policy.value(obs);
        std::vector<Eigen::VectorXd> actions(static_cast<std::size_t>(num_envs));
        for (int i = 0; i < num_envs; ++i) {
          Eigen::VectorXd a = mean.col(i);
          for (int j = 0; j < act_dim; ++j) a[j] += std::exp(log_std[j]) * normal(sample_rng);
          actions[static_cast<std::size_t>(i)] = a;
          auto& tr = trajectories[static_cast<std::size_t>(i)];
          tr.observations.push_back(obs.col(i));
          tr.actions.push_back(a);
          tr.log_probs.push_back(gaussian_log_prob(a, mean.col(i), log_std));
          tr.values.push_back(values[i]);
        }
        parallel_for(static_cast<std::size_t>(num_envs), job.workers, [&](std::size_t i) {
          steps[i] = envs[i]->step(actions[i]);
        });

        Eigen::VectorXd discounted(num_envs);
        for (int i = 0; i < num_envs; ++i) {
          auto& tk = trackers[static_cast<std::size_t>(i)];
          tk.discounted = cfg.gamma * tk.discounted + steps[static_cast<std::size_t>(i)].reward;
          discounted[i] = tk.discounted;
        }
        if (cfg.normalize_rewards) ret_norm.update(discounted.transpose());
        const double scale =
            cfg.normalize_rewards ? 1.0 / std::sqrt(ret_norm.var()[0] + reward_eps) : 1.0;

        std::vector<int> truncated;
        for (int i = 0; i < num_envs; ++i) {
          const EnvStep& s = steps[static_cast<std::size_t>(i)];
          auto& tr = trajectories[static_cast<std::size_t>(i)];
          tr.rewards.push_back(s.reward * scale);
          tr.dones.push_back(s.done);
          tr.breakdowns.push_back(s.breakdown);
          reward_sum += s.reward;
          for (std::size_t k = 0; k < kRewardTermCount; ++k) {
            term_sums[k] += s.breakdown.terms[k].weighted;
          }
          if (s.truncated) truncated.push_back(i);
        }
        if (!truncated.empty()) {
          Eigen::MatrixXd terminal(obs_dim, static_cast<Eigen::Index>(truncated.size()));
          for (std::size_t k = 0; k < truncated.size(); ++k) {
            terminal.col(static_cast<Eigen::Index>(k)) =
                steps[static_cast<std::size_t>(truncated[k])].observation;
          }
          if (cfg.normalize_observations) terminal = obs_norm.normalize(terminal);
          const Eigen::VectorXd boot = policy.value(terminal);
          for (std::size_t k = 0; k < truncated.size(); ++k) {
            trajectories[static_cast<std::size_t>(truncated[k])].rewards.back() +=
                cfg.gamma * boot[static_cast<Eigen::Index>(k)];
          }
        }
        for (int i = 0; i < num_envs; ++i) {
          const auto si = static_cast<std::size_t>(i);
          auto& tk = trackers[si];
          tk.ret += steps[si].reward;
          ++tk.length;
          if (steps[si].done) {
            episode_returns.push_back(tk.ret);
            episode_lengths.push_back(tk.length);
            tk = EpisodeTracker{};
          }
        }
        parallel_for(static_cast<std::size_t>(num_envs), job.workers, [&](std::size_t i) {
          current[i] = steps[i].done ? envs[i]->reset(env_rngs[i]) : steps[i].observation;
        });
      }
    } catch (const SimulationFault& e) {
      append_line(metrics_path, json{{"iteration", iteration},
                                     {"step", global_step},
                                     {"fault", "simulation"},
                                     {"quantity", e.quantity()},
                                     {"message", e.what()}});
      throw;
    }

    Eigen::MatrixXd bootstrap_obs(obs_dim, num_envs);
    for (int i = 0; i < num_envs; ++i) bootstrap_obs.col(i) = current[static_cast<std::size_t>(i)];
    if (cfg.normalize_observations) bootstrap_obs = obs_norm.normalize(bootstrap_obs);
    const Eigen::VectorXd bootstrap = policy.value(bootstrap_obs);

    const Eigen::Index n = static_cast<Eigen::Index>(num_envs) * cfg.horizon;
    Batch batch;
    batch.observations.resize(obs_dim, n);
    batch.actions.resize(act_dim, n);
    batch.log_probs.resize(n);
    batch.advantages.resize(n);
    batch.returns.resize(n);
    Eigen::Index col = 0;
    for (int i = 0; i < num_envs; ++i) {
      const auto& tr = trajectories[static_cast<std::size_t>(i)];
      const Advantages adv = gae_advantages(tr, cfg.gamma, cfg.lambda, bootstrap[i]);
      for (std::size_t t = 0; t < tr.size(); ++t, ++col) {
        batch.observations.col(col) = tr.observations[t];
        batch.actions.col(col) = tr.actions[t];
        batch.log_probs[col] = tr.log_probs[t];
        batch.advantages[col] = adv.advantages[static_cast<Eigen::Index>(t)];
        batch.returns[col] = adv.returns[static_cast<Eigen::Index>(t)];
      }
    }
    if (cfg.normalize_observations) obs_norm.update(raw_obs);

    UpdateStats stats;
    try {
      stats = learner.update(std::move(batch), minibatch_rng);
    } catch (const UpdateFault& e) {
      append_line(metrics_path, json{{"iteration", iteration},
                                     {"step", global_step},
                                     {"fault", "update"},
                                     {"message", e.what()}});
      throw;
    }
    global_step += n;
    ++iteration;

    json record;
    record["iteration"] = iteration;
    record["step"] = global_step;
    record["progress"] = p;
    record["reward_mean"] = reward_sum / static_cast<double>(n);
    json terms = json::object();
    for (std::size_t k = 0; k < kRewardTermCount; ++k) {
      terms[std::string(kRewardTermNames[k])] = term_sums[k] / static_cast<double>(n);
    }
    record["reward_terms"] = terms;
    record["episodes"] = episode_returns.size();
    if (!episode_returns.empty()) {
      double sr = 0.0, sl = 0.0;
      for (std::size_t k = 0; k < episode_returns.size(); ++k) {
        sr += episode_returns[k];
        sl += episode_lengths[k];
      }
      record["episode_return_mean"] = sr / static_cast<double>(episode_returns.size());
      record["episode_length_mean"] = sl / static_cast<double>(episode_returns.size());
    }
    record["policy_loss"] = stats.loss.policy_loss;
    record["value_loss"] = stats.loss.value_loss;
    record["entropy"] = stats.loss.entropy;
    record["approx_kl"] = stats.loss.approx_kl;
    record["clip_fraction"] = stats.loss.clip_fraction;
    record["grad_norm"] = stats.grad_norm;

    const bool finished = global_step >= cfg.total_steps;
    bool solved = false;
    if (job.eval_every > 0 && (iteration % job.eval_every == 0 || finished)) {
      const auto returns =
          evaluate_policy(policy, cfg.normalize_observations ? &obs_norm : nullptr, job.env,
                          job.eval_episodes, job.seed);
      double mean = 0.0;
      for (double r : returns) mean += r;
      mean /= static_cast<double>(returns.size());
      record["eval_return_mean"] = mean;
      result.evaluations.emplace_back(global_step, mean);
      if (job.stop_at_return && mean >= *job.stop_at_return) {
        solved = true;
        if (!result.solved_at) result.solved_at = global_step;
      }
    }
    append_line(metrics_path, record);

    if (finished || solved || iteration % job.checkpoint_every == 0) {
      const Checkpoint c = make_checkpoint(progress(global_step, cfg.total_steps));
      write_checkpoint(ckpt_dir / iteration_name(iteration), c);
      write_checkpoint(ckpt_dir / "latest.ckpt", c);
      result.last_checkpoint = ckpt_dir / "latest.ckpt";
    }
    if (solved) break;
  }
  result.steps = global_step;
  result.iterations = iteration;
  return result;
}

}  // namespace safefall
