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

#include "safefall/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "safefall/error.hpp"
#include "safefall/model/robot_model.hpp"

namespace safefall {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Reads known keys of one object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(name(key) + " has the wrong type");
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), name(key));
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError("unknown config key '" + name(key.c_str()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json range_json(const LinearRange& r) {
  return json{{"low", {r.low_base, r.low_slope}}, {"high", {r.high_base, r.high_slope}}};
}

void read_range(Section& s, const char* key, LinearRange& r) {
  if (!s.has(key)) return;
  Section c = s.child(key);
  std::array<double, 2> low{r.low_base, r.low_slope}, high{r.high_base, r.high_slope};
  c.get("low", low);
  c.get("high", high);
  c.finish();
  r = LinearRange{low[0], low[1], high[0], high[1]};
}

template <class T>
std::vector<std::string> names_of(const std::vector<T>& v) {
  std::vector<std::string> out;
  for (const auto& x : v) out.emplace_back(to_string(x));
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : fs::weakly_canonical(base / path);
}

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed ? json(*c.seed) : json();
  j["output_dir"] = c.output_dir;
  j["model"] = c.model;
  j["plane"] = c.plane;
  const SimConfig& s = c.sim;
  j["sim"] = {{"substep_dt", s.substep_dt},
              {"pd_dt", s.pd_dt},
              {"policy_dt", s.policy_dt},
              {"ground_stiffness", s.ground_stiffness},
              {"ground_damping", s.ground_damping},
              {"tangential_damping", s.tangential_damping},
              {"friction_coefficient", s.friction_coefficient},
              {"gravity", s.gravity},
              {"limit_stiffness", s.limit_stiffness},
              {"limit_damping", s.limit_damping},
              {"joint_limits", s.joint_limits},
              {"self_collision", s.self_collision}};
  const TaskSettings& t = c.task;
  j["task"] = {{"task", to_string(t.task)},
               {"action_scale", t.action_scale},
               {"episode_steps", t.episode_steps},
               {"stance_fraction", t.stance_fraction},
               {"min_speed", t.min_speed},
               {"max_speed", t.max_speed},
               {"disturbance_probability", t.disturbance_probability},
               {"disturbance_max", t.disturbance_max},
               {"initial_angle", t.initial_angle}};
  json weights;
  const auto w = c.weights.as_array();
  for (std::size_t k = 0; k < kRewardTermCount; ++k) {
    weights[std::string(kRewardTermNames[k])] = w[k];
  }
  j["reward"] = {{"variant", to_string(c.reward_variant)}, {"weights", weights}};
  const CurriculumSchedule& q = c.curriculum;
  j["curriculum"] = {{"init_dof_scale", range_json(q.init_dof_scale)},
                     {"waist_pitch", range_json(q.waist_pitch)},
                     {"waist_roll", range_json(q.waist_roll)},
                     {"waist_yaw", range_json(q.waist_yaw)},
                     {"shoulder_pitch", range_json(q.shoulder_pitch)},
                     {"shoulder_roll", range_json(q.shoulder_roll)},
                     {"elbow", range_json(q.elbow)},
                     {"root_vel", range_json(q.root_vel)},
                     {"push_magnitude", range_json(q.push_magnitude)},
                     {"push_direction", range_json(q.push_direction)},
                     {"push_duration", range_json(q.push_duration)},
                     {"push_start", range_json(q.push_start)},
                     {"push_bodies", q.push_bodies},
                     {"failure_joints", q.failure_joints},
                     {"failure_fraction", q.failure_fraction},
                     {"friction_randomization", q.friction_randomization},
                     {"friction", range_json(q.friction)}};
  const PPOConfig& p = c.ppo;
  j["ppo"] = {{"gamma", p.gamma},
              {"lambda", p.lambda},
              {"clip", p.clip},
              {"epochs", p.epochs},
              {"minibatches", p.minibatches},
              {"learning_rate", p.learning_rate},
              {"entropy_coef", p.entropy_coef},
              {"value_coef", p.value_coef},
              {"max_grad_norm", p.max_grad_norm},
              {"num_envs", p.num_envs},
              {"horizon", p.horizon},
              {"total_steps", p.total_steps},
              {"hidden", p.hidden},
              {"initial_log_std", p.initial_log_std},
              {"normalize_observations", p.normalize_observations},
              {"normalize_rewards", p.normalize_rewards}};
  j["train"] = {{"checkpoint_every", c.train.checkpoint_every},
                {"eval_every", c.train.eval_every},
                {"eval_episodes", c.train.eval_episodes},
                {"stop_at_return",
                 c.train.stop_at_return ? json(*c.train.stop_at_return) : json()}};
  const BenchSettings& b = c.bench;
  const RolloutSettings& r = b.rollout;
  j["bench"] = {
      {"scenarios", names_of(b.scenarios)},
      {"controllers", names_of(b.controllers)},
      {"fall_checkpoint", b.fall_checkpoint},
      {"walk_checkpoint", b.walk_checkpoint},
      {"planar_policy", b.planar == PlanarPolicy::kProject ? "project" : "in_plane_only"},
      {"magnitudes", b.magnitudes},
      {"upper_fraction", b.upper_fraction},
      {"stance_trigger", {r.stance_trigger_min, r.stance_trigger_max}},
      {"walk_trigger", {r.walk_trigger_min, r.walk_trigger_max}},
      {"push_duration", {r.push_duration_min, r.push_duration_max}},
      {"record_seconds", r.record_seconds},
      {"rollouts", r.rollouts}};
  j["eval"] = {{"magnitude", c.eval.magnitude},
               {"body", c.eval.body},
               {"push_start", c.eval.push_start},
               {"push_duration", c.eval.push_duration},
               {"seconds", c.eval.seconds}};
  return j;
}

RunConfig run_config_from_json(const json& document, const fs::path& base_dir) {
  RunConfig c;
  Section root(document, "");
  if (root.has("seed") && !document.at("seed").is_null()) {
    std::uint64_t seed = 0;
    root.get("seed", seed);
    c.seed = seed;
  } else if (root.has("seed")) {
    root.at("seed");
  }
  root.get("output_dir", c.output_dir);
  root.get("model", c.model);
  if (!c.model.empty()) c.model = resolve(base_dir, c.model).string();
  root.get("plane", c.plane);

  if (root.has("sim")) {
    Section s = root.child("sim");
    SimConfig& x = c.sim;
    s.get("substep_dt", x.substep_dt);
    s.get("pd_dt", x.pd_dt);
    s.get("policy_dt", x.policy_dt);
    s.get("ground_stiffness", x.ground_stiffness);
    s.get("ground_damping", x.ground_damping);
    s.get("tangential_damping", x.tangential_damping);
    s.get("friction_coefficient", x.friction_coefficient);
    s.get("gravity", x.gravity);
    s.get("limit_stiffness", x.limit_stiffness);
    s.get("limit_damping", x.limit_damping);
    s.get("joint_limits", x.joint_limits);
    s.get("self_collision", x.self_collision);
    s.finish();
  }
  if (root.has("task")) {
    Section s = root.child("task");
    TaskSettings& x = c.task;
    std::string task(to_string(x.task));
    s.get("task", task);
    x.task = task_from_string(task);
    s.get("action_scale", x.action_scale);
    s.get("episode_steps", x.episode_steps);
    s.get("stance_fraction", x.stance_fraction);
    s.get("min_speed", x.min_speed);
    s.get("max_speed", x.max_speed);
    s.get("disturbance_probability", x.disturbance_probability);
    s.get("disturbance_max", x.disturbance_max);
    s.get("initial_angle", x.initial_angle);
    s.finish();
  }
  if (root.has("reward")) {
    Section s = root.child("reward");
    std::string variant(to_string(c.reward_variant));
    s.get("variant", variant);
    c.reward_variant = reward_variant_from_string(variant);
    if (s.has("weights")) {
      Section w = s.child("weights");
      for (std::size_t k = 0; k < kRewardTermCount; ++k) {
        w.get(std::string(kRewardTermNames[k]).c_str(), c.weights[k]);
      }
      w.finish();
    }
    s.finish();
  }
  if (root.has("curriculum")) {
    Section s = root.child("curriculum");
    CurriculumSchedule& x = c.curriculum;
    read_range(s, "init_dof_scale", x.init_dof_scale);
    read_range(s, "waist_pitch", x.waist_pitch);
    read_range(s, "waist_roll", x.waist_roll);
    read_range(s, "waist_yaw", x.waist_yaw);
    read_range(s, "shoulder_pitch", x.shoulder_pitch);
    read_range(s, "shoulder_roll", x.shoulder_roll);
    read_range(s, "elbow", x.elbow);
    read_range(s, "root_vel", x.root_vel);
    read_range(s, "push_magnitude", x.push_magnitude);
    read_range(s, "push_direction", x.push_direction);
    read_range(s, "push_duration", x.push_duration);
    read_range(s, "push_start", x.push_start);
    s.get("push_bodies", x.push_bodies);
    s.get("failure_joints", x.failure_joints);
    s.get("failure_fraction", x.failure_fraction);
    s.get("friction_randomization", x.friction_randomization);
    read_range(s, "friction", x.friction);
    s.finish();
  }
  if (root.has("ppo")) {
    Section s = root.child("ppo");
    PPOConfig& x = c.ppo;
    s.get("gamma", x.gamma);
    s.get("lambda", x.lambda);
    s.get("clip", x.clip);
    s.get("epochs", x.epochs);
    s.get("minibatches", x.minibatches);
    s.get("learning_rate", x.learning_rate);
    s.get("entropy_coef", x.entropy_coef);
    s.get("value_coef", x.value_coef);
    s.get("max_grad_norm", x.max_grad_norm);
    s.get("num_envs", x.num_envs);
    s.get("horizon", x.horizon);
    s.get("total_steps", x.total_steps);
    s.get("hidden", x.hidden);
    s.get("initial_log_std", x.initial_log_std);
    s.get("normalize_observations", x.normalize_observations);
    s.get("normalize_rewards", x.normalize_rewards);
    s.finish();
  }
  if (root.has("train")) {
    Section s = root.child("train");
    s.get("checkpoint_every", c.train.checkpoint_every);
    s.get("eval_every", c.train.eval_every);
    s.get("eval_episodes", c.train.eval_episodes);
    if (s.has("stop_at_return")) {
      const json& v = s.at("stop_at_return");
      if (v.is_null()) {
        c.train.stop_at_return.reset();
      } else if (v.is_number()) {
        c.train.stop_at_return = v.get<double>();
      } else {
        throw ValidationError("train.stop_at_return has the wrong type");
      }
    }
    s.finish();
  }
  if (root.has("bench")) {
    Section s = root.child("bench");
    BenchSettings& x = c.bench;
    if (s.has("scenarios")) {
      std::vector<std::string> names;
      s.get("scenarios", names);
      x.scenarios.clear();
      for (const auto& n : names) x.scenarios.push_back(scenario_from_string(n));
    }
    if (s.has("controllers")) {
      std::vector<std::string> names;
      s.get("controllers", names);
      x.controllers.clear();
      for (const auto& n : names) x.controllers.push_back(controller_from_string(n));
    }
    s.get("fall_checkpoint", x.fall_checkpoint);
    s.get("walk_checkpoint", x.walk_checkpoint);
    x.fall_checkpoint = resolve(base_dir, x.fall_checkpoint).string();
    x.walk_checkpoint = resolve(base_dir, x.walk_checkpoint).string();
    std::string planar = x.planar == PlanarPolicy::kProject ? "project" : "in_plane_only";
    s.get("planar_policy", planar);
    if (planar == "project") {
      x.planar = PlanarPolicy::kProject;
    } else if (planar == "in_plane_only") {
      x.planar = PlanarPolicy::kInPlaneOnly;
    } else {
      throw ValidationError("bench.planar_policy must be 'project' or 'in_plane_only'");
    }
    s.get("magnitudes", x.magnitudes);
    s.get("upper_fraction", x.upper_fraction);
    RolloutSettings& r = x.rollout;
    std::array<double, 2> window{r.stance_trigger_min, r.stance_trigger_max};
    s.get("stance_trigger", window);
    r.stance_trigger_min = window[0];
    r.stance_trigger_max = window[1];
    window = {r.walk_trigger_min, r.walk_trigger_max};
    s.get("walk_trigger", window);
    r.walk_trigger_min = window[0];
    r.walk_trigger_max = window[1];
    window = {r.push_duration_min, r.push_duration_max};
    s.get("push_duration", window);
    r.push_duration_min = window[0];
    r.push_duration_max = window[1];
    s.get("record_seconds", r.record_seconds);
    s.get("rollouts", r.rollouts);
    s.finish();
  }
  if (root.has("eval")) {
    Section s = root.child("eval");
    s.get("magnitude", c.eval.magnitude);
    s.get("body", c.eval.body);
    s.get("push_start", c.eval.push_start);
    s.get("push_duration", c.eval.push_duration);
    s.get("seconds", c.eval.seconds);
    s.finish();
  }
  root.finish();
  return c;
}

void apply_override(json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &document;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (path[i].empty()) throw ValidationError("--set key '" + key + "' is malformed");
    json& next = (*node)[path[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ValidationError("--set key '" + key + "' is not an object path");
    node = &next;
  }
  (*node)[path.back()] = value;
}

RunConfig load_run_config(const std::optional<fs::path>& file,
                          const std::vector<std::string>& overrides) {
  json document = json::object();
  fs::path base = fs::current_path();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ValidationError("cannot open config file '" + file->string() + "'");
    document = json::parse(in, nullptr, false, true);
    if (document.is_discarded()) {
      throw ParseError("config file '" + file->string() + "' is not valid JSON");
    }
    base = fs::absolute(*file).parent_path();
  }
  for (const auto& o : overrides) apply_override(document, o);
  return run_config_from_json(document, base);
}

void validate_run_config(const RunConfig& c) {
  if (!c.seed) throw ValidationError("seed: required (set it in the config or with --set seed=N)");
  if (c.output_dir.empty()) throw ValidationError("output_dir: required");
  if (c.model.empty()) throw ValidationError("model: path is required");
  if (!fs::exists(c.model)) throw ValidationError("model: file '" + c.model + "' does not exist");
  const RobotModel model = load_model_file(c.model);
  if (!c.plane.empty() && c.plane != to_string(model.plane)) {
    throw ValidationError("plane: config says '" + c.plane + "' but model '" + c.model +
                          "' is " + std::string(to_string(model.plane)));
  }
  validate_sim_config(c.sim);
  validate_task_settings(c.task);
  validate_reward_weights(c.weights);
  validate_schedule(c.curriculum);
  if (c.task.task == Task::kFall) check_schedule_names(c.curriculum, model);
  if (c.task.task == Task::kPendulum && model.dof() != 1) {
    throw ValidationError("task.task: pendulum needs a 1-DoF model");
  }
  validate_ppo_config(c.ppo);
  if (c.train.checkpoint_every < 1) throw ValidationError("train.checkpoint_every must be >= 1");
  if (c.train.eval_every < 0) throw ValidationError("train.eval_every must be >= 0");
  if (c.train.eval_episodes < 1) throw ValidationError("train.eval_episodes must be >= 1");
  validate_rollout_settings(c.bench.rollout);
  if (!(c.bench.upper_fraction > 0.0 && c.bench.upper_fraction <= 1.0)) {
    throw ValidationError("bench.upper_fraction must lie in (0, 1]");
  }
  if (!(c.eval.seconds > 0.0 && c.eval.push_duration >= 0.0 && c.eval.push_start >= 0.0 &&
        c.eval.magnitude >= 0.0)) {
    throw ValidationError("eval: times and magnitude must be non-negative, seconds positive");
  }
  if (!model.find_link(c.eval.body)) {
    throw ValidationError("eval.body: '" + c.eval.body + "' is not a link of the model");
  }
}

fs::path resolve_output_dir(const RunConfig& c) {
  const fs::path out(c.output_dir);
  if (out.is_absolute()) return out;
  const char* root = std::getenv("SAFEFALL_OUTPUT_ROOT");
  return (root && *root ? fs::path(root) : fs::current_path()) / out;
}

}  // namespace safefall
