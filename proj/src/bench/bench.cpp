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

#include "safefall/bench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>

#include "nlohmann/json.hpp"
#include "safefall/curriculum/curriculum.hpp"
#include "safefall/error.hpp"
#include "safefall/parallel.hpp"
#include "safefall/seed.hpp"
#include "safefall/sim/simulator.hpp"

namespace safefall {

namespace {

using json = nlohmann::json;

constexpr double kPi = std::numbers::pi;
constexpr double kSampleRate = 200.0;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_level(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::size_t kind_index(ScenarioKind kind) { return static_cast<std::size_t>(kind); }

bool is_walk(ScenarioKind kind) { return kind != ScenarioKind::kStancePush; }

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kStancePush: return "stance-push";
    case ScenarioKind::kWalkPush: return "walk-push";
    case ScenarioKind::kWalkBreak: return "walk-break";
  }
  return "?";
}

ScenarioKind scenario_from_string(std::string_view name) {
  for (ScenarioKind k : {ScenarioKind::kStancePush, ScenarioKind::kWalkPush,
                         ScenarioKind::kWalkBreak}) {
    if (name == to_string(k)) return k;
  }
  throw ValidationError("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kBaseline: return "baseline";
    case ControllerKind::kZtc: return "ztc";
    case ControllerKind::kDpc: return "dpc";
    case ControllerKind::kOurs: return "ours";
  }
  return "?";
}

ControllerKind controller_from_string(std::string_view name) {
  for (ControllerKind k : {ControllerKind::kBaseline, ControllerKind::kZtc, ControllerKind::kDpc,
                           ControllerKind::kOurs}) {
    if (name == to_string(k)) return k;
  }
  throw ValidationError("unknown controller '" + std::string(name) + "'");
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kContactForce: return "contact_force";
    case Metric::kMotionEnergy: return "motion_energy";
    case Metric::kActuationImpulse: return "actuation_impulse";
  }
  return "?";
}

BenchScenario BenchScenario::defaults(ScenarioKind kind) {
  BenchScenario s;
  s.kind = kind;
  std::vector<double> directions;
  for (int k = 0; k < 8; ++k) directions.push_back(k * kPi / 4.0);
  const std::vector<std::string> bodies{"head", "torso", "pelvis"};
  const std::vector<double> speeds{0.15, 0.4, 0.75};
  switch (kind) {
    case ScenarioKind::kStancePush:
      s.magnitudes = {350.0, 550.0, 750.0};
      s.directions = directions;
      s.bodies = bodies;
      break;
    case ScenarioKind::kWalkPush:
      s.magnitudes = {750.0};
      s.directions = directions;
      s.bodies = bodies;
      s.speeds = speeds;
      break;
    case ScenarioKind::kWalkBreak:
      s.joints = {"ankle_roll", "ankle_pitch", "knee", "hip_roll", "hip_pitch", "hip_yaw"};
      s.speeds = speeds;
      break;
  }
  return s;
}

std::vector<BenchConfig> enumerate_configs(const BenchScenario& scenario, const RobotModel& model,
                                           PlanarPolicy policy) {
  std::vector<BenchConfig> out;
  auto flag = [&](BenchConfig& c) {
    if (is_walk(c.kind) && model.plane != Plane::kSagittal) {
      c.skipped = true;
      c.skip_reason = "no forward walking in this plane";
      return;
    }
    if (c.direction) {
      const PlanarPush p = project_heading(*c.direction, model.plane);
      if (p.scale < 1e-9) {
        c.skipped = true;
        c.skip_reason = "heading perpendicular to the model plane";
        return;
      }
      if (policy == PlanarPolicy::kInPlaneOnly && p.scale < 1.0 - 1e-9) {
        c.skipped = true;
        c.skip_reason = "heading not along the model plane";
        return;
      }
    }
    if (c.body && !model.find_link(*c.body)) {
      c.skipped = true;
      c.skip_reason = "body '" + *c.body + "' not in model";
      return;
    }
    if (c.joint && !model.find_joint("l_" + *c.joint)) {
      c.skipped = true;
      c.skip_reason = "joint 'l_" + *c.joint + "' not in model";
    }
  };
  auto add = [&](BenchConfig c) {
    c.index = out.size();
    c.kind = scenario.kind;
    flag(c);
    out.push_back(std::move(c));
  };
  switch (scenario.kind) {
    case ScenarioKind::kStancePush:
      for (double m : scenario.magnitudes)
        for (double d : scenario.directions)
          for (const auto& b : scenario.bodies) {
            BenchConfig c;
            c.magnitude = m;
            c.direction = d;
            c.body = b;
            add(c);
          }
      break;
    case ScenarioKind::kWalkPush:
      for (double m : scenario.magnitudes)
        for (double d : scenario.directions)
          for (const auto& b : scenario.bodies)
            for (double v : scenario.speeds) {
              BenchConfig c;
              c.magnitude = m;
              c.direction = d;
              c.body = b;
              c.speed = v;
              add(c);
            }
      break;
    case ScenarioKind::kWalkBreak:
      for (const auto& j : scenario.joints)
        for (double v : scenario.speeds) {
          BenchConfig c;
          c.joint = j;
          c.speed = v;
          add(c);
        }
      break;
  }
  return out;
}

RolloutTensor::RolloutTensor(Metric metric_, std::vector<std::string> objects_,
                             std::size_t rollouts_, std::size_t timesteps_)
    : metric(metric_),
      objects(std::move(objects_)),
      rollouts(rollouts_),
      timesteps(timesteps_),
      values(rollouts_ * timesteps_ * objects.size(), 0.0),
      valid(rollouts_, true) {}

std::size_t RolloutTensor::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

double actuation_impulse_sample(double q, double qd, double lower, double upper) {
  const double range = upper - lower;
  double out = 0.0;
  if (q - lower >= 0.95 * range) out += std::max(qd, 0.0);
  if (q - lower <= 0.05 * range) out += std::min(qd, 0.0);
  return out;
}

double motion_energy_sample(double mass, const Eigen::Vector2d& velocity) {
  return 0.5 * mass * velocity.squaredNorm();
}

void validate_rollout_settings(const RolloutSettings& s) {
  auto window = [](double lo, double hi, const char* name) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && lo <= hi)) {
      throw ValidationError(std::string("bench.") + name + ": need 0 <= min <= max");
    }
  };
  window(s.stance_trigger_min, s.stance_trigger_max, "stance_trigger");
  window(s.walk_trigger_min, s.walk_trigger_max, "walk_trigger");
  window(s.push_duration_min, s.push_duration_max, "push_duration");
  if (!(s.record_seconds > 0.0 && std::isfinite(s.record_seconds))) {
    throw ValidationError("bench.record_seconds must be positive");
  }
  for (int n : s.rollouts) {
    if (n < 1) throw ValidationError("bench.rollouts entries must be >= 1");
  }
}

ConfigResult run_config(const BenchConfig& config, const ControllerSpec& controller,
                        std::shared_ptr<const RobotModel> model, const SimConfig& sim,
                        const RolloutSettings& settings, std::size_t rollouts,
                        std::uint64_t seed, int workers) {
  if (config.skipped) {
    throw ContractViolation("configuration " + std::to_string(config.index) +
                            " is skipped: " + config.skip_reason);
  }
  validate_sim_config(sim);
  validate_rollout_settings(settings);
  if (std::abs(1.0 / sim.pd_dt - kSampleRate) > 1e-6) {
    throw ValidationError("bench sampling needs sim.pd_dt = 0.005 (200 Hz)");
  }
  const bool walk = is_walk(config.kind);
  if (controller.kind == ControllerKind::kOurs && !controller.fall_policy) {
    throw ValidationError("controller 'ours' needs a fall policy checkpoint");
  }
  if ((controller.kind == ControllerKind::kBaseline || walk) && !controller.walk_policy) {
    throw ValidationError("controller '" + std::string(to_string(controller.kind)) + "' on " +
                          std::string(to_string(config.kind)) +
                          " needs a locomotion policy checkpoint");
  }

  std::vector<std::string> links;
  for (const auto& l : model->links) links.push_back(l.name);
  std::vector<std::string> joints;
  for (const auto& j : model->joints) joints.push_back(j.name);
  const auto timesteps =
      static_cast<std::size_t>(std::lround(settings.record_seconds * kSampleRate));

  ConfigResult result;
  result.config = config;
  result.controller = controller.kind;
  result.tensors[0] = RolloutTensor(Metric::kContactForce, links, rollouts, timesteps);
  result.tensors[1] = RolloutTensor(Metric::kMotionEnergy, links, rollouts, timesteps);
  result.tensors[2] = RolloutTensor(Metric::kActuationImpulse, joints, rollouts, timesteps);
  result.torques = RolloutTensor(Metric::kActuationImpulse, joints, rollouts, timesteps);

  std::optional<std::size_t> broken;
  if (config.joint) broken = model->find_joint("l_" + *config.joint);
  const Eigen::VectorXd q0 = model->default_pose();
  const Eigen::VectorXd lower = model->lower_limits();
  const Eigen::VectorXd upper = model->upper_limits();
  const std::uint64_t config_seed = derive_seed(seed, kSeedBench, config.index);

  // vector<bool> packs bits, so workers write validity here instead.
  std::vector<char> faulted(rollouts, 0);
  auto rollout = [&](std::size_t n) {
    std::mt19937_64 rng(derive_seed(config_seed, kSeedBench, n));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double trigger_draw = u(rng);
    const double duration_draw = u(rng);
    const double lo = walk ? settings.walk_trigger_min : settings.stance_trigger_min;
    const double hi = walk ? settings.walk_trigger_max : settings.stance_trigger_max;
    const double trigger =
        std::ceil((lo + (hi - lo) * trigger_draw) / sim.policy_dt - 1e-9) * sim.policy_dt;
    const double duration = settings.push_duration_min +
                            (settings.push_duration_max - settings.push_duration_min) *
                                duration_draw;

    std::vector<PushEvent> pushes;
    if (config.magnitude && config.direction && config.body) {
      const PlanarPush p = project_heading(*config.direction, model->plane);
      pushes.push_back(
          PushEvent{*config.magnitude * p.scale, p.direction, *config.body, trigger, duration});
    }
    std::optional<PolicyController> walker;
    if (controller.walk_policy && (walk || controller.kind == ControllerKind::kBaseline)) {
      walker.emplace(*controller.walk_policy, model);
    }
    std::optional<PolicyController> faller;
    if (controller.kind == ControllerKind::kOurs) faller.emplace(*controller.fall_policy, model);
    const Eigen::VectorXd command = Eigen::VectorXd::Constant(1, config.speed.value_or(0.0));

    Simulator simulator(model, sim);
    SimState state = default_state(*model);
    std::size_t recorded = 0;
    auto& contact = result.tensors[0];
    auto& energy = result.tensors[1];
    auto& impulse = result.tensors[2];
    auto& torques = result.torques;
    const PdObserver observer = [&](const PdSample& s) {
      if (recorded >= timesteps) return;
      const BodyMotion motion = body_motion(s.state, *model);
      for (std::size_t i = 0; i < links.size(); ++i) {
        contact.at(n, recorded, i) = s.contact_forces[static_cast<Eigen::Index>(i)];
        energy.at(n, recorded, i) =
            motion_energy_sample(model->links[i].mass, motion.com_velocity[i]);
      }
      for (std::size_t j = 0; j < joints.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        impulse.at(n, recorded, j) =
            actuation_impulse_sample(s.state.q[jj], s.state.qd[jj], lower[jj], upper[jj]);
        torques.at(n, recorded, j) = s.torque[jj];
      }
      ++recorded;
    };

    try {
      while (recorded < timesteps) {
        const bool triggered = state.sim_time + 1e-9 >= trigger;
        if (broken && triggered) state.failure_mask[*broken] = true;
        Eigen::VectorXd walk_targets;
        if (walker) walk_targets = walker->targets(state, command);
        Eigen::VectorXd fall_targets;
        if (faller) fall_targets = faller->targets(state);
        Eigen::VectorXd targets = q0;
        DriveMode mode = DriveMode::kPositionTargets;
        if (walk && !triggered) {
          targets = walk_targets;
        } else {
          switch (controller.kind) {
            case ControllerKind::kBaseline: targets = walk_targets; break;
            case ControllerKind::kZtc:
              if (triggered) mode = DriveMode::kZeroTorque;
              break;
            case ControllerKind::kDpc: break;
            case ControllerKind::kOurs: targets = fall_targets; break;
          }
        }
        state = simulator.step(state, std::span<const double>(targets.data(), targets.size()),
                               pushes, mode, triggered ? observer : PdObserver());
      }
    } catch (const SimulationFault&) {
      faulted[n] = 1;
    }
  };
  parallel_for(rollouts, workers, rollout);
  for (std::size_t n = 0; n < rollouts; ++n) {
    if (!faulted[n]) continue;
    for (auto& t : result.tensors) t.valid[n] = false;
    result.torques.valid[n] = false;
  }
  result.invalid = rollouts - result.tensors[0].valid_count();
  return result;
}

double upper_mean(std::span<const double> values, double fraction) {
  if (values.empty()) throw ContractViolation("upper_mean of an empty collection");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ContractViolation("upper_mean fraction must lie in (0, 1]");
  }
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(values.size()) - 1e-12));
  const std::size_t take = std::clamp<std::size_t>(k, 1, values.size());
  std::vector<double> v(values.begin(), values.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(take - 1), v.end(),
                   std::greater<double>());
  // Ascending summation keeps the result independent of the input order.
  std::sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(take));
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += v[i];
  return sum / static_cast<double>(take);
}

Eigen::MatrixXd rollout_upper_means(const RolloutTensor& tensor, double fraction) {
  const std::size_t objects = tensor.objects.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tensor.valid_count()),
                      static_cast<Eigen::Index>(objects));
  std::vector<double> series(tensor.timesteps);
  Eigen::Index row = 0;
  for (std::size_t n = 0; n < tensor.rollouts; ++n) {
    if (!tensor.valid[n]) continue;
    for (std::size_t i = 0; i < objects; ++i) {
      for (std::size_t t = 0; t < tensor.timesteps; ++t) series[t] = tensor.at(n, t, i);
      out(row, static_cast<Eigen::Index>(i)) = upper_mean(series, fraction);
    }
    ++row;
  }
  return out;
}

double scalar_summary(const RolloutTensor& tensor, double fraction,
                      const std::vector<std::string>& objects) {
  std::vector<Eigen::Index> columns;
  if (objects.empty()) {
    for (std::size_t i = 0; i < tensor.objects.size(); ++i) {
      columns.push_back(static_cast<Eigen::Index>(i));
    }
  } else {
    for (const auto& name : objects) {
      const auto it = std::find(tensor.objects.begin(), tensor.objects.end(), name);
      if (it == tensor.objects.end()) {
        throw ValidationError("unknown object '" + name + "' in " +
                              std::string(to_string(tensor.metric)) + " tensor");
      }
      columns.push_back(it - tensor.objects.begin());
    }
  }
  const Eigen::MatrixXd means = rollout_upper_means(tensor, fraction);
  if (means.rows() == 0) throw ContractViolation("tensor has no valid rollouts");
  double sum = 0.0;
  for (Eigen::Index r = 0; r < means.rows(); ++r) {
    for (Eigen::Index c : columns) sum += means(r, c);
  }
  return sum / static_cast<double>(means.rows() * static_cast<Eigen::Index>(columns.size()));
}

Eigen::VectorXd per_object_summary(const RolloutTensor& tensor, double fraction) {
  const Eigen::MatrixXd means = rollout_upper_means(tensor, fraction);
  if (means.rows() == 0) throw ContractViolation("tensor has no valid rollouts");
  return means.colwise().mean().transpose();
}

Eigen::MatrixXd heatmap(const RolloutTensor& tensor) {
  const auto objects = static_cast<Eigen::Index>(tensor.objects.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(objects, static_cast<Eigen::Index>(tensor.timesteps));
  const std::size_t valid = tensor.valid_count();
  if (valid == 0) throw ContractViolation("tensor has no valid rollouts");
  for (std::size_t n = 0; n < tensor.rollouts; ++n) {
    if (!tensor.valid[n]) continue;
    for (std::size_t t = 0; t < tensor.timesteps; ++t) {
      for (Eigen::Index i = 0; i < objects; ++i) {
        out(i, static_cast<Eigen::Index>(t)) += tensor.at(n, t, static_cast<std::size_t>(i));
      }
    }
  }
  return out / static_cast<double>(valid);
}

std::vector<FactorLevel> factor_breakdown(const std::vector<BenchConfig>& configs,
                                          const std::vector<double>& scalars,
                                          std::string_view factor) {
  require_size(scalars.size(), configs.size(), "factor_breakdown scalars");
  std::function<std::optional<std::string>(const BenchConfig&)> key;
  auto number = [](const std::optional<double>& v) -> std::optional<std::string> {
    if (!v) return std::nullopt;
    return fmt_level(*v);
  };
  if (factor == "magnitude") {
    key = [&](const BenchConfig& c) { return number(c.magnitude); };
  } else if (factor == "direction") {
    key = [&](const BenchConfig& c) { return number(c.direction); };
  } else if (factor == "speed") {
    key = [&](const BenchConfig& c) { return number(c.speed); };
  } else if (factor == "body") {
    key = [](const BenchConfig& c) { return c.body; };
  } else if (factor == "joint") {
    key = [](const BenchConfig& c) { return c.joint; };
  } else {
    throw ValidationError("unknown factor '" + std::string(factor) + "'");
  }
  std::vector<FactorLevel> out;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    if (configs[k].skipped || !std::isfinite(scalars[k])) continue;
    const auto level = key(configs[k]);
    if (!level) continue;
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const FactorLevel& f) { return f.level == *level; });
    if (it == out.end()) {
      out.push_back(FactorLevel{*level, 0.0, 0});
      it = out.end() - 1;
    }
    it->value += scalars[k];
    ++it->configs;
  }
  for (auto& f : out) f.value /= static_cast<double>(f.configs);
  return out;
}

LabeledValues distribution_difference(const LabeledValues& a, const LabeledValues& b) {
  require_size(a.values.size(), a.labels.size(), "distribution_difference a");
  require_size(b.values.size(), b.labels.size(), "distribution_difference b");
  if (a.labels != b.labels) throw ContractViolation("distribution_difference: object axes differ");
  double sa = 0.0, sb = 0.0;
  for (double v : a.values) sa += v;
  for (double v : b.values) sb += v;
  if (sa == 0.0 || sb == 0.0 || !std::isfinite(sa) || !std::isfinite(sb)) {
    throw ContractViolation("distribution_difference: summary total is zero or non-finite");
  }
  LabeledValues out;
  out.labels = a.labels;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    out.values.push_back(a.values[i] / sa - b.values[i] / sb);
  }
  return out;
}

std::vector<ScenarioSummary> run_bench(const BenchJob& job) {
  validate_rollout_settings(job.settings);
  validate_sim_config(job.sim);
  if (job.scenarios.empty()) throw ValidationError("bench.scenarios is empty");
  if (job.controllers.empty()) throw ValidationError("bench.controllers is empty");
  for (const auto& c : job.controllers) {
    if (c.kind == ControllerKind::kOurs && !c.fall_policy) {
      throw ValidationError("controller 'ours' needs a fall policy checkpoint");
    }
    const bool needs_walker =
        c.kind == ControllerKind::kBaseline ||
        std::any_of(job.scenarios.begin(), job.scenarios.end(), is_walk);
    if (needs_walker && !c.walk_policy) {
      throw ValidationError("controller '" + std::string(to_string(c.kind)) +
                            "' needs a locomotion policy checkpoint");
    }
  }
  const RobotModel& model = *job.model;
  const std::vector<std::string> critical = model.critical_bodies;
  std::filesystem::create_directories(job.out_dir / "heatmaps");

  std::ofstream summary_csv(job.out_dir / "summary.csv");
  summary_csv << "controller,scenario,metric,objects,value,configs_run,configs_total,coverage,"
                 "rollouts_invalid\n";
  std::ofstream configs_csv(job.out_dir / "configs.csv");
  configs_csv << "controller,scenario,config,magnitude,direction,body,speed,joint,skipped,"
                 "rollouts,invalid";
  for (Metric m : kMetrics) {
    configs_csv << ',' << to_string(m);
    if (m != Metric::kActuationImpulse) configs_csv << ',' << to_string(m) << "_critical";
  }
  configs_csv << '\n';
  std::ofstream object_csv(job.out_dir / "per_object.csv");
  object_csv << "controller,scenario,metric,object,value\n";
  std::ofstream factor_csv(job.out_dir / "per_factor.csv");
  factor_csv << "controller,scenario,metric,objects,factor,level,value,configs\n";

  json manifest;
  manifest["format"] = "safefall-bench/1";
  manifest["seed"] = job.seed;
  manifest["upper_fraction"] = job.upper_fraction;
  manifest["sample_rate_hz"] = kSampleRate;
  manifest["record_seconds"] = job.settings.record_seconds;
  manifest["planar_policy"] =
      job.planar == PlanarPolicy::kProject ? "project" : "in_plane_only";
  manifest["model"] = model.name;
  manifest["config"] = job.config_json.empty() ? json() : json::parse(job.config_json);
  manifest["runs"] = json::array();

  std::vector<ScenarioSummary> summaries;
  for (const auto& controller : job.controllers) {
    for (ScenarioKind kind : job.scenarios) {
      std::vector<BenchConfig> configs =
          enumerate_configs(BenchScenario::defaults(kind), model, job.planar);
      if (!job.magnitude_filter.empty()) {
        for (auto& c : configs) {
          if (c.magnitude && !c.skipped &&
              std::find(job.magnitude_filter.begin(), job.magnitude_filter.end(),
                        *c.magnitude) == job.magnitude_filter.end()) {
            c.skipped = true;
            c.skip_reason = "magnitude not selected";
          }
        }
      }
      const auto rollouts = static_cast<std::size_t>(job.settings.rollouts[kind_index(kind)]);
      ScenarioSummary summary;
      summary.controller = controller.kind;
      summary.scenario = kind;
      summary.configs_total = configs.size();

      std::array<std::vector<double>, 3> all_scalars;
      std::array<std::vector<double>, 3> critical_scalars;
      std::array<Eigen::VectorXd, 3> object_sum;
      std::array<Eigen::MatrixXd, 3> heat_sum;
      std::array<std::vector<std::string>, 3> object_names;
      std::size_t heat_rollouts = 0;
      std::size_t configs_with_data = 0;
      json run;
      run["controller"] = to_string(controller.kind);
      run["scenario"] = to_string(kind);
      run["rollouts_per_config"] = rollouts;
      run["configs"] = json::array();

      for (const auto& config : configs) {
        json entry;
        entry["index"] = config.index;
        if (config.magnitude) entry["magnitude"] = *config.magnitude;
        if (config.direction) entry["direction"] = *config.direction;
        if (config.body) entry["body"] = *config.body;
        if (config.speed) entry["speed"] = *config.speed;
        if (config.joint) entry["joint"] = *config.joint;
        entry["skipped"] = config.skipped;
        if (config.skipped) entry["skip_reason"] = config.skip_reason;
        entry["seed"] = derive_seed(job.seed, kSeedBench, config.index);

        std::array<double, 3> all_v;
        std::array<double, 3> crit_v;
        all_v.fill(std::nan(""));
        crit_v.fill(std::nan(""));
        std::size_t invalid = 0;
        if (!config.skipped) {
          ++summary.configs_run;
          const ConfigResult r = run_config(config, controller, job.model, job.sim,
                                            job.settings, rollouts, job.seed, job.workers);
          invalid = r.invalid;
          summary.rollouts_invalid += invalid;
          const std::size_t valid = r.tensors[0].valid_count();
          if (valid > 0) {
            ++configs_with_data;
            for (std::size_t m = 0; m < 3; ++m) {
              const RolloutTensor& t = r.tensors[m];
              all_v[m] = scalar_summary(t, job.upper_fraction);
              if (kMetrics[m] != Metric::kActuationImpulse) {
                crit_v[m] = scalar_summary(t, job.upper_fraction, critical);
              }
              const Eigen::VectorXd per_object = per_object_summary(t, job.upper_fraction);
              const Eigen::MatrixXd heat = heatmap(t) * static_cast<double>(valid);
              if (object_sum[m].size() == 0) {
                object_sum[m] = Eigen::VectorXd::Zero(per_object.size());
                heat_sum[m] = Eigen::MatrixXd::Zero(heat.rows(), heat.cols());
                object_names[m] = t.objects;
              }
              object_sum[m] += per_object;
              heat_sum[m] += heat;
            }
            heat_rollouts += valid;
          }
        }
        entry["invalid_rollouts"] = invalid;
        run["configs"].push_back(entry);
        for (std::size_t m = 0; m < 3; ++m) {
          all_scalars[m].push_back(all_v[m]);
          critical_scalars[m].push_back(crit_v[m]);
        }

        auto opt = [](const auto& v) -> std::string {
          if (!v) return "";
          if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) {
            return fmt(*v);
          } else {
            return *v;
          }
        };
        auto value = [](double v) { return std::isfinite(v) ? fmt(v) : std::string(); };
        configs_csv << to_string(controller.kind) << ',' << to_string(kind) << ','
                    << config.index << ',' << opt(config.magnitude) << ','
                    << opt(config.direction) << ',' << opt(config.body) << ','
                    << opt(config.speed) << ',' << opt(config.joint) << ','
                    << (config.skipped ? 1 : 0) << ',' << (config.skipped ? 0 : rollouts) << ','
                    << invalid;
        for (std::size_t m = 0; m < 3; ++m) {
          configs_csv << ',' << value(all_v[m]);
          if (kMetrics[m] != Metric::kActuationImpulse) configs_csv << ',' << value(crit_v[m]);
        }
        configs_csv << '\n';
      }

      auto mean_finite = [](const std::vector<double>& v) {
        double s = 0.0;
        std::size_t n = 0;
        for (double x : v) {
          if (std::isfinite(x)) {
            s += x;
            ++n;
          }
        }
        return n ? s / static_cast<double>(n) : std::nan("");
      };
      const double coverage =
          static_cast<double>(summary.configs_run) / static_cast<double>(summary.configs_total);
      for (std::size_t m = 0; m < 3; ++m) {
        const Metric metric = kMetrics[m];
        summary.all_objects[m] = mean_finite(all_scalars[m]);
        summary.critical[m] = mean_finite(critical_scalars[m]);
        std::vector<std::pair<std::string, const std::vector<double>*>> sets{
            {"all", &all_scalars[m]}};
        if (metric != Metric::kActuationImpulse) sets.emplace_back("critical", &critical_scalars[m]);
        for (const auto& [objects, scalars] : sets) {
          const double v = mean_finite(*scalars);
          summary_csv << to_string(controller.kind) << ',' << to_string(kind) << ','
                      << to_string(metric) << ',' << objects << ','
                      << (std::isfinite(v) ? fmt(v) : std::string()) << ','
                      << summary.configs_run << ',' << summary.configs_total << ','
                      << fmt(coverage) << ',' << summary.rollouts_invalid << '\n';
          for (const char* factor : {"magnitude", "direction", "body", "speed", "joint"}) {
            for (const FactorLevel& f : factor_breakdown(configs, *scalars, factor)) {
              factor_csv << to_string(controller.kind) << ',' << to_string(kind) << ','
                         << to_string(metric) << ',' << objects << ',' << factor << ','
                         << f.level << ',' << fmt(f.value) << ',' << f.configs << '\n';
            }
          }
        }
        if (configs_with_data == 0) continue;
        const Eigen::VectorXd per_object = object_sum[m] / static_cast<double>(configs_with_data);
        for (Eigen::Index i = 0; i < per_object.size(); ++i) {
          object_csv << to_string(controller.kind) << ',' << to_string(kind) << ','
                     << to_string(metric) << ',' << object_names[m][static_cast<std::size_t>(i)]
                     << ',' << fmt(per_object[i]) << '\n';
        }
        const Eigen::MatrixXd heat = heat_sum[m] / static_cast<double>(heat_rollouts);
        std::ofstream h(job.out_dir / "heatmaps" /
                        (std::string(to_string(controller.kind)) + "_" +
                         std::string(to_string(kind)) + "_" + std::string(to_string(metric)) +
                         ".csv"));
        h << "object";
        for (Eigen::Index t = 0; t < heat.cols(); ++t) h << ',' << t;
        h << '\n';
        for (Eigen::Index i = 0; i < heat.rows(); ++i) {
          h << object_names[m][static_cast<std::size_t>(i)];
          for (Eigen::Index t = 0; t < heat.cols(); ++t) h << ',' << fmt(heat(i, t));
          h << '\n';
        }
      }
      run["configs_total"] = summary.configs_total;
      run["configs_run"] = summary.configs_run;
      run["coverage"] = coverage;
      run["rollouts_invalid"] = summary.rollouts_invalid;
      manifest["runs"].push_back(run);
      summaries.push_back(summary);
    }
  }
  std::ofstream(job.out_dir / "manifest.json") << manifest.dump(2) << '\n';
  return summaries;
}

}  // namespace safefall
