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

#include "safefall/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "safefall/bench/bench.hpp"
#include "safefall/cli/config.hpp"
#include "safefall/error.hpp"
#include "safefall/parallel.hpp"
#include "safefall/rl/checkpoint.hpp"
#include "safefall/rl/trainer.hpp"
#include "safefall/sim/simulator.hpp"

namespace safefall {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kPi = std::numbers::pi;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  int workers = 0;
};

RunConfig load(const Common& c, bool require_valid = true) {
  std::optional<fs::path> file;
  if (!c.config.empty()) file = c.config;
  RunConfig config = load_run_config(file, c.overrides);
  if (require_valid) validate_run_config(config);
  return config;
}

int workers_of(const Common& c) { return c.workers > 0 ? c.workers : default_workers(); }

std::shared_ptr<const RobotModel> model_of(const RunConfig& c) {
  return std::make_shared<const RobotModel>(load_model_file(c.model));
}

EnvSpec env_spec(const RunConfig& c, std::shared_ptr<const RobotModel> model) {
  EnvSpec spec;
  spec.model = std::move(model);
  spec.sim = c.sim;
  spec.task = c.task;
  spec.weights = c.weights;
  spec.variant = c.reward_variant;
  spec.schedule = c.curriculum;
  return spec;
}

std::shared_ptr<const Checkpoint> checkpoint_at(const std::string& path, const char* what) {
  if (path.empty()) return nullptr;
  if (!fs::exists(path)) {
    throw ValidationError(std::string(what) + ": checkpoint '" + path + "' does not exist");
  }
  return std::make_shared<const Checkpoint>(read_checkpoint(path));
}

void write_snapshot(const fs::path& dir, const RunConfig& c) {
  std::ofstream(dir / "config.json") << to_json(c).dump(2) << '\n';
}

int cmd_train(const Common& common, const std::string& resume, std::ostream& out) {
  const RunConfig c = load(common);
  auto model = model_of(c);
  if (!resume.empty()) {
    const Checkpoint ckpt = *checkpoint_at(resume, "--resume");
    if (ckpt.task != c.task.task) {
      throw ValidationError("--resume: checkpoint task '" + std::string(to_string(ckpt.task)) +
                            "' differs from task.task");
    }
  }
  const fs::path dir = resolve_output_dir(c) / "train";
  fs::create_directories(dir);
  write_snapshot(dir, c);

  TrainJob job;
  job.env = env_spec(c, model);
  job.ppo = c.ppo;
  job.seed = *c.seed;
  job.out_dir = dir;
  job.checkpoint_every = c.train.checkpoint_every;
  job.workers = workers_of(common);
  job.config_json = to_json(c).dump();
  job.eval_every = c.train.eval_every;
  job.eval_episodes = c.train.eval_episodes;
  job.stop_at_return = c.train.stop_at_return;
  if (!resume.empty()) job.resume_from = resume;
  const TrainResult r = train(job);
  out << "trained " << r.steps << " steps in " << r.iterations << " iterations; checkpoint "
      << r.last_checkpoint.string() << '\n';
  if (r.solved_at) out << "reached the return threshold at step " << *r.solved_at << '\n';
  return kExitOk;
}

int cmd_bench(const Common& common, const std::vector<std::string>& scenarios,
              const std::vector<std::string>& controllers, const std::string& fall,
              const std::string& walk, std::ostream& out, std::ostream& err) {
  RunConfig c = load(common);
  if (!scenarios.empty()) {
    c.bench.scenarios.clear();
    for (const auto& s : scenarios) c.bench.scenarios.push_back(scenario_from_string(s));
  }
  if (!controllers.empty()) {
    c.bench.controllers.clear();
    for (const auto& s : controllers) c.bench.controllers.push_back(controller_from_string(s));
  }
  if (!fall.empty()) c.bench.fall_checkpoint = fs::absolute(fall).string();
  if (!walk.empty()) c.bench.walk_checkpoint = fs::absolute(walk).string();
  auto model = model_of(c);
  const auto fall_ckpt = checkpoint_at(c.bench.fall_checkpoint, "bench.fall_checkpoint");
  const auto walk_ckpt = checkpoint_at(c.bench.walk_checkpoint, "bench.walk_checkpoint");
  if (fall_ckpt && fall_ckpt->task != Task::kFall) {
    throw ValidationError("bench.fall_checkpoint: not a fall policy");
  }
  if (walk_ckpt && walk_ckpt->task != Task::kLocomotion) {
    throw ValidationError("bench.walk_checkpoint: not a locomotion policy");
  }
  BenchJob job;
  job.model = model;
  job.sim = c.sim;
  job.scenarios = c.bench.scenarios;
  for (ControllerKind k : c.bench.controllers) {
    ControllerSpec spec;
    spec.kind = k;
    spec.fall_policy = fall_ckpt;
    spec.walk_policy = walk_ckpt;
    // Probe the checkpoints against the model before anything is written.
    if (k == ControllerKind::kOurs && fall_ckpt) PolicyController(*fall_ckpt, model);
    if (walk_ckpt) PolicyController(*walk_ckpt, model);
    job.controllers.push_back(spec);
  }
  job.settings = c.bench.rollout;
  job.planar = c.bench.planar;
  job.magnitude_filter = c.bench.magnitudes;
  job.upper_fraction = c.bench.upper_fraction;
  job.seed = *c.seed;
  job.workers = workers_of(common);
  job.config_json = to_json(c).dump();
  // run_bench validates checkpoints per controller; repeat its checks here so
  // a bad selection fails before the output directory exists.
  for (const auto& spec : job.controllers) {
    const bool walk_needed =
        spec.kind == ControllerKind::kBaseline ||
        std::any_of(job.scenarios.begin(), job.scenarios.end(),
                    [](ScenarioKind k) { return k != ScenarioKind::kStancePush; });
    if (spec.kind == ControllerKind::kOurs && !spec.fall_policy) {
      throw ValidationError("controller 'ours' needs bench.fall_checkpoint or --checkpoint");
    }
    if (walk_needed && !spec.walk_policy) {
      throw ValidationError("controller '" + std::string(to_string(spec.kind)) +
                            "' with the selected scenarios needs bench.walk_checkpoint or "
                            "--walk-checkpoint");
    }
  }
  for (ScenarioKind k : job.scenarios) {
    const auto configs = enumerate_configs(BenchScenario::defaults(k), *model, job.planar);
    const auto run = std::count_if(configs.begin(), configs.end(),
                                   [](const BenchConfig& x) { return !x.skipped; });
    if (run == 0) {
      err << "warning: every " << to_string(k) << " configuration is skipped for the "
          << to_string(model->plane) << " model\n";
    }
  }
  job.out_dir = resolve_output_dir(c) / "bench";
  fs::create_directories(job.out_dir);
  write_snapshot(job.out_dir, c);
  const auto summaries = run_bench(job);
  for (const auto& s : summaries) {
    out << to_string(s.controller) << ' ' << to_string(s.scenario) << ": " << s.configs_run << '/'
        << s.configs_total << " configs, " << s.rollouts_invalid << " invalid rollouts";
    if (s.configs_run > 0) {
      out << ", critical contact " << s.critical[0] << " N, critical energy " << s.critical[1]
          << " J, impulse " << s.all_objects[2];
    }
    out << '\n';
  }
  out << "results in " << job.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const Common& common, const std::string& checkpoint, const std::string& controller,
             std::ostream& out) {
  RunConfig c = load(common);
  const ControllerKind kind = controller_from_string(controller);
  if (kind == ControllerKind::kBaseline) {
    throw ValidationError("--controller: eval supports ours, dpc and ztc");
  }
  const std::string path = checkpoint.empty() ? c.bench.fall_checkpoint : fs::absolute(checkpoint).string();
  auto model = model_of(c);
  std::shared_ptr<const Checkpoint> ckpt;
  if (kind == ControllerKind::kOurs) {
    if (path.empty()) throw ValidationError("--checkpoint: required for controller 'ours'");
    ckpt = checkpoint_at(path, "--checkpoint");
    PolicyController probe(*ckpt, model);
  }
  const fs::path dir = resolve_output_dir(c) / "eval";
  fs::create_directories(dir);
  write_snapshot(dir, c);

  const bool sagittal = model->plane == Plane::kSagittal;
  const std::vector<std::pair<std::string, double>> cases =
      sagittal ? std::vector<std::pair<std::string, double>>{{"front", 0.0}, {"back", kPi}}
               : std::vector<std::pair<std::string, double>>{{"left", kPi / 2},
                                                             {"right", 3 * kPi / 2}};
  const Eigen::VectorXd q0 = model->default_pose();
  for (const auto& [label, heading] : cases) {
    const PlanarPush planar = project_heading(heading, model->plane);
    const std::vector<PushEvent> pushes{PushEvent{c.eval.magnitude * planar.scale,
                                                  planar.direction, c.eval.body,
                                                  c.eval.push_start, c.eval.push_duration}};
    std::optional<PolicyController> policy;
    if (ckpt) policy.emplace(*ckpt, model);
    Simulator sim(model, c.sim);
    SimState state = default_state(*model);
    const fs::path file = dir / (std::string(to_string(kind)) + "_" + label + ".csv");
    std::ofstream csv(file);
    csv << "time,push_active,root_x,root_z,root_pitch";
    for (const auto& j : model->joints) csv << ",q_" << j.name;
    for (const auto& l : model->links) {
      csv << ',' << l.name << "_x," << l.name << "_z," << l.name << "_angle";
    }
    for (const auto& l : model->links) csv << ",contact_" << l.name;
    csv << '\n';
    auto row = [&](const SimState& s) {
      const BodyMotion m = body_motion(s, *model);
      char buf[32];
      auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        csv << ',' << buf;
      };
      std::snprintf(buf, sizeof(buf), "%.4f", s.sim_time);
      csv << buf << ',' << (pushes[0].active_at(s.sim_time) ? 1 : 0);
      put(s.root_pose.x());
      put(s.root_pose.y());
      put(s.root_pose.z());
      for (Eigen::Index j = 0; j < s.q.size(); ++j) put(s.q[j]);
      for (std::size_t i = 0; i < model->links.size(); ++i) {
        put(m.com[i].x());
        put(m.com[i].y());
        put(m.angle[i]);
      }
      for (Eigen::Index i = 0; i < s.contact_forces.size(); ++i) put(s.contact_forces[i]);
      csv << '\n';
    };
    row(state);
    const int steps = static_cast<int>(std::lround(c.eval.seconds / c.sim.policy_dt));
    for (int k = 0; k < steps; ++k) {
      Eigen::VectorXd targets = policy ? policy->targets(state) : q0;
      const bool falling = state.sim_time + 1e-9 >= c.eval.push_start;
      const DriveMode mode = kind == ControllerKind::kZtc && falling ? DriveMode::kZeroTorque
                                                                     : DriveMode::kPositionTargets;
      state = sim.step(state, std::span<const double>(targets.data(), targets.size()), pushes,
                       mode);
      row(state);
    }
    out << "wrote " << file.string() << '\n';
  }
  return kExitOk;
}

// Minimal reader for the CSV files the bench writes (no quoting needed).
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing results file '" + path.string() + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw ValidationError("results file '" + path.string() + "' is empty");
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name,
                   const fs::path& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw ValidationError("results file '" + path.string() + "' has no column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

int cmd_export(const std::string& results, const std::string& view, const std::string& a,
               const std::string& b, const std::string& scenario, const std::string& metric,
               const std::string& out_file, std::ostream& out, std::ostream& err) {
  const fs::path dir(results);
  if (!fs::exists(dir / "manifest.json")) {
    throw ValidationError("'" + results + "' is not a bench results directory (no manifest.json)");
  }
  if (view != "summary" && view != "heatmap" && view != "distdiff") {
    throw ValidationError("--view must be summary, heatmap or distdiff");
  }
  if (!scenario.empty()) scenario_from_string(scenario);
  auto keep = [&](const std::string& s, const std::string& m) {
    return (scenario.empty() || s == scenario) && (metric.empty() || m == metric);
  };
  std::ostringstream text;
  if (view == "summary") {
    const fs::path path = dir / "summary.csv";
    const auto rows = read_csv(path);
    const auto& h = rows[0];
    const std::size_t cs = column(h, "scenario", path), cm = column(h, "metric", path);
    text << "controller,scenario,metric,objects,value,coverage,rollouts_invalid\n";
    const std::size_t cc = column(h, "controller", path), co = column(h, "objects", path),
                      cv = column(h, "value", path), cg = column(h, "coverage", path),
                      ci = column(h, "rollouts_invalid", path);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& x = rows[r];
      if (!keep(x[cs], x[cm])) continue;
      text << x[cc] << ',' << x[cs] << ',' << x[cm] << ',' << x[co] << ',' << x[cv] << ','
           << x[cg] << ',' << x[ci] << '\n';
    }
  } else if (view == "heatmap") {
    json all = json::array();
    for (const auto& entry : fs::directory_iterator(dir / "heatmaps")) {
      const std::string stem = entry.path().stem().string();
      const auto first = stem.find('_');
      const auto second = stem.find('_', first + 1);
      if (first == std::string::npos || second == std::string::npos) continue;
      const std::string ctl = stem.substr(0, first);
      const std::string scn = stem.substr(first + 1, second - first - 1);
      const std::string met = stem.substr(second + 1);
      if (!keep(scn, met)) continue;
      const auto rows = read_csv(entry.path());
      json objects = json::array(), values = json::array();
      for (std::size_t r = 1; r < rows.size(); ++r) {
        objects.push_back(rows[r][0]);
        json row = json::array();
        for (std::size_t k = 1; k < rows[r].size(); ++k) row.push_back(std::stod(rows[r][k]));
        values.push_back(row);
      }
      all.push_back({{"controller", ctl}, {"scenario", scn}, {"metric", met},
                     {"sample_rate_hz", 200}, {"objects", objects}, {"values", values}});
    }
    std::sort(all.begin(), all.end(), [](const json& x, const json& y) {
      return std::tie(x["controller"], x["scenario"], x["metric"]) <
             std::tie(y["controller"], y["scenario"], y["metric"]);
    });
    text << all.dump(1) << '\n';
  } else {
    controller_from_string(a);
    controller_from_string(b);
    const fs::path path = dir / "per_object.csv";
    const auto rows = read_csv(path);
    const auto& h = rows[0];
    const std::size_t cc = column(h, "controller", path), cs = column(h, "scenario", path),
                      cm = column(h, "metric", path), co = column(h, "object", path),
                      cv = column(h, "value", path);
    std::map<std::pair<std::string, std::string>, std::map<std::string, LabeledValues>> groups;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& x = rows[r];
      if (!keep(x[cs], x[cm]) || (x[cc] != a && x[cc] != b)) continue;
      auto& lv = groups[{x[cs], x[cm]}][x[cc]];
      lv.labels.push_back(x[co]);
      lv.values.push_back(std::stod(x[cv]));
    }
    text << "scenario,metric,object," << a << "_minus_" << b << '\n';
    std::size_t written = 0;
    for (const auto& [key, by_controller] : groups) {
      if (!by_controller.count(a) || !by_controller.count(b)) continue;
      try {
        const LabeledValues d = distribution_difference(by_controller.at(a), by_controller.at(b));
        for (std::size_t i = 0; i < d.labels.size(); ++i) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.17g", d.values[i]);
          text << key.first << ',' << key.second << ',' << d.labels[i] << ',' << buf << '\n';
        }
        ++written;
      } catch (const ContractViolation& e) {
        err << "warning: skipped " << key.first << ' ' << key.second << ": " << e.what() << '\n';
      }
    }
    if (written == 0) {
      throw ValidationError("no scenario has results for both '" + a + "' and '" + b + "'");
    }
  }
  if (out_file.empty()) {
    out << text.str();
  } else {
    std::ofstream(out_file) << text.str();
  }
  return kExitOk;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "JSON run configuration");
  app->add_option("--set", c.overrides, "Override a config key, e.g. --set ppo.num_envs=64")
      ->take_all();
  app->add_option("--workers", c.workers, "Worker threads (default: all cores)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Planar humanoid fall-damage training and benchmarking", "safefall"};
  app.require_subcommand(1);
  Common common;

  auto* train_cmd = app.add_subcommand("train", "Train a policy");
  add_common(train_cmd, common);
  std::string resume;
  train_cmd->add_option("--resume", resume, "Continue from this checkpoint");

  auto* bench_cmd = app.add_subcommand("bench", "Run the damage benchmark");
  add_common(bench_cmd, common);
  std::vector<std::string> scenarios, controllers;
  std::string fall_ckpt, walk_ckpt;
  bench_cmd->add_option("--scenario", scenarios, "stance-push, walk-push or walk-break");
  bench_cmd->add_option("--controller", controllers, "baseline, ztc, dpc or ours");
  bench_cmd->add_option("--checkpoint", fall_ckpt, "Fall policy checkpoint");
  bench_cmd->add_option("--walk-checkpoint", walk_ckpt, "Locomotion policy checkpoint");

  auto* eval_cmd = app.add_subcommand("eval", "Dump front and back fall pose traces");
  add_common(eval_cmd, common);
  std::string eval_ckpt, eval_controller = "ours";
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Fall policy checkpoint");
  eval_cmd->add_option("--controller", eval_controller, "ours, dpc or ztc");

  auto* export_cmd = app.add_subcommand("export", "Print plot-ready tables from bench results");
  std::string results, view = "summary", ctl_a = "ours", ctl_b = "dpc", scenario, metric, out_file;
  export_cmd->add_option("--results", results, "Bench results directory")->required();
  export_cmd->add_option("--view", view, "summary, heatmap or distdiff");
  export_cmd->add_option("--a", ctl_a, "distdiff minuend controller");
  export_cmd->add_option("--b", ctl_b, "distdiff subtrahend controller");
  export_cmd->add_option("--scenario", scenario, "Only this scenario");
  export_cmd->add_option("--metric", metric, "Only this metric");
  export_cmd->add_option("-o,--out", out_file, "Write to a file instead of stdout");

  auto* print_cmd = app.add_subcommand("print-config", "Print the resolved configuration");
  add_common(print_cmd, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*train_cmd) return cmd_train(common, resume, out);
    if (*bench_cmd) {
      return cmd_bench(common, scenarios, controllers, fall_ckpt, walk_ckpt, out, err);
    }
    if (*eval_cmd) return cmd_eval(common, eval_ckpt, eval_controller, out);
    if (*export_cmd) {
      return cmd_export(results, view, ctl_a, ctl_b, scenario, metric, out_file, out, err);
    }
    if (*print_cmd) {
      out << to_json(load(common, false)).dump(2) << '\n';
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "fault: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace safefall
