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

#include "safefall/rl/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <system_error>

#include "safefall/error.hpp"

namespace safefall {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'F', 'C', 'K', 'P', 'T', '\0', '\n'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(const T& value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void string(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vector(const Eigen::VectorXd& v) {
    pod<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void normalizer(const RunningNormalizer& n) {
    vector(n.mean());
    vector(n.var());
    pod(n.count());
    pod(n.clip());
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T pod() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    check();
    return value;
  }
  std::string string() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 32)) fail("string length out of range");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }
  Eigen::VectorXd vector() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 32)) fail("vector length out of range");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    in_.read(reinterpret_cast<char*>(v.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
    check();
    return v;
  }
  RunningNormalizer normalizer() {
    Eigen::VectorXd mean = vector();
    Eigen::VectorXd var = vector();
    const double count = pod<double>();
    const double clip = pod<double>();
    RunningNormalizer n;
    if (mean.size() != var.size()) fail("normalizer sizes differ");
    n.restore(std::move(mean), std::move(var), count, clip);
    return n;
  }
  [[noreturn]] void fail(const std::string& why) {
    throw ParseError("checkpoint '" + path_ + "': " + why);
  }

 private:
  void check() {
    if (!in_) fail("truncated file");
  }
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + tmp.string() + "'");
    out.write(kMagic.data(), kMagic.size());
    Writer w(out);
    w.pod(kCheckpointVersion);
    w.string(c.config_json);
    w.pod(static_cast<std::uint32_t>(c.task));
    w.pod(c.action_scale);
    w.pod(static_cast<std::int32_t>(c.shape.obs_dim));
    w.pod(static_cast<std::int32_t>(c.shape.act_dim));
    w.pod(static_cast<std::uint32_t>(c.shape.hidden.size()));
    for (int h : c.shape.hidden) w.pod(static_cast<std::int32_t>(h));
    w.vector(c.params);
    w.vector(c.adam_m);
    w.vector(c.adam_v);
    w.pod(c.adam_t);
    w.pod(static_cast<std::uint8_t>(c.normalize_observations));
    w.normalizer(c.observation_normalizer);
    w.pod(static_cast<std::uint8_t>(c.normalize_rewards));
    w.normalizer(c.return_normalizer);
    w.pod(c.global_step);
    w.pod(c.iteration);
    w.pod(c.progress);
    w.pod(c.seed);
    out.flush();
    if (!out) throw std::runtime_error("failed writing checkpoint '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path.string() + "'");
  Reader r(in, path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) r.fail("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  c.config_json = r.string();
  const auto task = r.pod<std::uint32_t>();
  if (task > static_cast<std::uint32_t>(Task::kPendulum)) r.fail("unknown task id");
  c.task = static_cast<Task>(task);
  c.action_scale = r.pod<double>();
  c.shape.obs_dim = r.pod<std::int32_t>();
  c.shape.act_dim = r.pod<std::int32_t>();
  const auto layers = r.pod<std::uint32_t>();
  if (layers > 64) r.fail("too many hidden layers");
  c.shape.hidden.clear();
  for (std::uint32_t k = 0; k < layers; ++k) c.shape.hidden.push_back(r.pod<std::int32_t>());
  c.params = r.vector();
  c.adam_m = r.vector();
  c.adam_v = r.vector();
  c.adam_t = r.pod<std::int64_t>();
  c.normalize_observations = r.pod<std::uint8_t>() != 0;
  c.observation_normalizer = r.normalizer();
  c.normalize_rewards = r.pod<std::uint8_t>() != 0;
  c.return_normalizer = r.normalizer();
  c.global_step = r.pod<std::int64_t>();
  c.iteration = r.pod<std::int64_t>();
  c.progress = r.pod<double>();
  c.seed = r.pod<std::uint64_t>();
  if (in.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes");
  if (ActorCritic(c.shape).param_count() != c.params.size()) {
    r.fail("parameter count does not match the network shape");
  }
  return c;
}

PolicyController::PolicyController(const Checkpoint& c,
                                   std::shared_ptr<const RobotModel> model)
    : model_(std::move(model)),
      task_(c.task),
      action_scale_(c.action_scale),
      policy_(c.shape),
      normalize_(c.normalize_observations),
      normalizer_(c.observation_normalizer),
      builder_(model_, extra_observation_size(c.task)),
      q0_(model_->default_pose()) {
  if (builder_.size() != c.shape.obs_dim ||
      static_cast<int>(model_->dof()) != c.shape.act_dim) {
    throw ValidationError("checkpoint does not match model '" + model_->name + "'");
  }
  policy_.params() = c.params;
  reset();
}

void PolicyController::reset() {
  builder_.reset();
  a_prev_ = q0_;
}

Eigen::VectorXd PolicyController::targets(const SimState& state,
                                          const Eigen::VectorXd& extra) {
  Eigen::VectorXd obs = builder_.observe(state, a_prev_, extra);
  if (normalize_) obs = normalizer_.normalize(obs);
  const Eigen::VectorXd action = policy_.mean(obs).col(0);
  a_prev_ = q0_ + action_scale_ * action;
  return a_prev_;
}

}  // namespace safefall
