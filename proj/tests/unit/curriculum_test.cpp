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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "safefall/curriculum/curriculum.hpp"
#include "safefall/error.hpp"
#include "safefall/model/robot_model.hpp"

namespace safefall {
namespace {

constexpr double kPi = std::numbers::pi;

RobotModel load(const char* file) {
  return load_model_file(std::string(SAFEFALL_MODELS_DIR) + "/" + file);
}

// Kolmogorov-Smirnov distance between samples and U(lo, hi).
double ks_uniform(std::vector<double> x, double lo, double hi) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = std::clamp((x[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

TEST(Curriculum, Progress) {
  EXPECT_DOUBLE_EQ(progress(0, 100), 0.0);
  EXPECT_DOUBLE_EQ(progress(50, 100), 0.5);
  EXPECT_DOUBLE_EQ(progress(250, 100), 1.0);
  EXPECT_THROW(progress(-1, 100), ContractViolation);
  EXPECT_THROW(progress(1, 0), ContractViolation);
}

TEST(Curriculum, RangeEndpointsMatchClosedForms) {
  const CurriculumSchedule s;
  for (double p : {0.0, 0.5, 1.0}) {
    struct Row {
      const LinearRange& r;
      double lo, hi;
    };
    const Row rows[] = {
        {s.init_dof_scale, 0.8, 1.2},
        {s.waist_pitch, -0.5, 0.5},
        {s.waist_roll, -0.5, 0.5},
        {s.waist_yaw, -(p + 0.2), p + 0.2},
        {s.shoulder_pitch, -(p + 0.4), p + 0.4},
        {s.shoulder_roll, 0.15, 1.3 * p + 0.15},
        {s.elbow, -0.1 - 0.3 * p, 0.1 + 0.6 * p},
        {s.root_vel, -0.1 - 0.25 * p, 0.1 + 0.25 * p},
        {s.push_magnitude, 50 + 100 * p, 350 + 500 * p},
        {s.push_direction, -kPi, kPi},
    };
    for (const Row& row : rows) {
      EXPECT_NEAR(row.r.low(p), row.lo, 1e-12);
      EXPECT_NEAR(row.r.high(p), row.hi, 1e-12);
    }
  }
  EXPECT_DOUBLE_EQ(s.push_magnitude.low(0.0), 50.0);
  EXPECT_DOUBLE_EQ(s.push_magnitude.high(0.0), 350.0);
  EXPECT_DOUBLE_EQ(s.push_magnitude.low(1.0), 150.0);
  EXPECT_DOUBLE_EQ(s.push_magnitude.high(1.0), 850.0);
}

TEST(Curriculum, SampledPushesFollowTheirRanges) {
  const RobotModel model = load("sagittal.json");
  const CurriculumSchedule s;
  std::mt19937_64 rng(5);
  for (double p : {0.0, 0.5, 1.0}) {
    std::vector<double> magnitude, heading, start, duration;
    for (int k = 0; k < 3000; ++k) {
      const EpisodeSetup e = sample_episode(s, p, rng, model, EpisodeMode::kPush);
      ASSERT_TRUE(e.push.has_value());
      heading.push_back(e.push_heading);
      start.push_back(e.push->start_time);
      duration.push_back(e.push->duration);
      const double c = std::abs(std::cos(e.push_heading));
      if (c > 0.2) magnitude.push_back(e.push->magnitude / c);
      EXPECT_TRUE(e.push->direction == 0.0 || e.push->direction == kPi);
    }
    const double crit = 1.95;  // alpha = 0.001
    EXPECT_LT(ks_uniform(heading, -kPi, kPi), crit / std::sqrt(heading.size()));
    EXPECT_LT(ks_uniform(start, 0.5, 1.5), crit / std::sqrt(start.size()));
    EXPECT_LT(ks_uniform(duration, 0.1, 0.3), crit / std::sqrt(duration.size()));
    EXPECT_LT(ks_uniform(magnitude, 50 + 100 * p, 350 + 500 * p),
              crit / std::sqrt(magnitude.size()));
  }
}

TEST(Curriculum, BodyAndFailureFrequencies) {
  const RobotModel model = load("sagittal.json");
  const CurriculumSchedule s;
  std::mt19937_64 rng(9);
  std::map<std::string, int> bodies, joints;
  const int n = 6000;
  for (int k = 0; k < n; ++k) {
    bodies[sample_episode(s, 1.0, rng, model, EpisodeMode::kPush).push->target_body]++;
    const EpisodeSetup f = sample_episode(s, 1.0, rng, model, EpisodeMode::kFailure);
    ASSERT_TRUE(f.failed_joint.has_value());
    EXPECT_FALSE(f.push.has_value());
    EXPECT_GE(f.failure_time, 0.5);
    EXPECT_LE(f.failure_time, 1.5);
    joints[*f.failed_joint]++;
  }
  ASSERT_EQ(bodies.size(), 3u);
  for (const auto& [name, count] : bodies) EXPECT_NEAR(count / double(n), 1.0 / 3.0, 0.03) << name;
  const auto legs = model.joints_in_group(JointGroup::kLeg);
  ASSERT_EQ(joints.size(), legs.size());
  for (const auto& [name, count] : joints) {
    EXPECT_NEAR(count / double(n), 1.0 / legs.size(), 0.03) << name;
  }
}

TEST(Curriculum, InitialStateWithinRowsAndLimits) {
  const RobotModel model = load("sagittal.json");
  const CurriculumSchedule s;
  std::mt19937_64 rng(13);
  const Eigen::VectorXd q0 = model.default_pose();
  const Eigen::VectorXd lo = model.lower_limits(), hi = model.upper_limits();
  for (double p : {0.0, 1.0}) {
    for (int k = 0; k < 500; ++k) {
      const EpisodeSetup e = sample_episode(s, p, rng, model, EpisodeMode::kPush);
      for (std::size_t j = 0; j < model.dof(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const std::string& name = model.joints[j].name;
        const double q = e.initial.q[jj];
        EXPECT_GE(q, lo[jj]);
        EXPECT_LE(q, hi[jj]);
        if (name.ends_with("elbow")) {
          EXPECT_GE(q, std::max(-0.1 - 0.3 * p, lo[jj]) - 1e-12);
          EXPECT_LE(q, 0.1 + 0.6 * p + 1e-12);
        } else if (name.ends_with("shoulder_pitch")) {
          EXPECT_LE(std::abs(q), 0.4 + p + 1e-12);
        } else if (name == "waist_pitch") {
          EXPECT_LE(std::abs(q), 0.5 + 1e-12);
        } else {
          const double a = 0.8 * q0[jj], b = 1.2 * q0[jj];
          EXPECT_GE(q, std::min(a, b) - 1e-12) << name;
          EXPECT_LE(q, std::max(a, b) + 1e-12) << name;
        }
      }
      EXPECT_LE(std::abs(e.initial.root_vel.x()), 0.1 + 0.25 * p + 1e-12);
    }
  }
}

TEST(Curriculum, Deterministic) {
  const RobotModel model = load("sagittal.json");
  const CurriculumSchedule s;
  std::mt19937_64 a(21), b(21);
  for (int k = 0; k < 50; ++k) {
    const EpisodeSetup x = sample_episode(s, 0.3, a, model, EpisodeMode::kPush);
    const EpisodeSetup y = sample_episode(s, 0.3, b, model, EpisodeMode::kPush);
    EXPECT_EQ(x.initial, y.initial);
    EXPECT_EQ(x.push, y.push);
  }
}

TEST(Curriculum, ModesConsumeTheSameDraws) {
  const RobotModel model = load("sagittal.json");
  const CurriculumSchedule s;
  std::mt19937_64 a(4), b(4);
  sample_episode(s, 0.7, a, model, EpisodeMode::kPush);
  sample_episode(s, 0.7, b, model, EpisodeMode::kFailure);
  EXPECT_EQ(a(), b());
}

TEST(Curriculum, HeadingProjection) {
  PlanarPush p = project_heading(0.0, Plane::kSagittal);
  EXPECT_DOUBLE_EQ(p.direction, 0.0);
  EXPECT_DOUBLE_EQ(p.scale, 1.0);
  p = project_heading(kPi, Plane::kSagittal);
  EXPECT_DOUBLE_EQ(p.direction, kPi);
  EXPECT_NEAR(p.scale, 1.0, 1e-15);
  p = project_heading(3 * kPi / 4, Plane::kSagittal);
  EXPECT_DOUBLE_EQ(p.direction, kPi);
  EXPECT_NEAR(p.scale, std::sqrt(0.5), 1e-15);
  p = project_heading(kPi / 2, Plane::kFrontal);
  EXPECT_DOUBLE_EQ(p.direction, 0.0);
  EXPECT_DOUBLE_EQ(p.scale, 1.0);
  p = project_heading(3 * kPi / 2, Plane::kFrontal);
  EXPECT_DOUBLE_EQ(p.direction, kPi);
  EXPECT_NEAR(project_heading(kPi / 2, Plane::kSagittal).scale, 0.0, 1e-15);
}

TEST(Curriculum, FrontalKeepsLateralVelocity) {
  const RobotModel model = load("frontal.json");
  const CurriculumSchedule s;
  std::mt19937_64 a(8);
  const EpisodeSetup e = sample_episode(s, 1.0, a, model, EpisodeMode::kPush);
  // Reproduce the draw order: scale per joint, six extra rows per joint, vx, vy.
  std::mt19937_64 b(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < 7 * model.dof(); ++k) u(b);
  u(b);
  const double vy = -0.35 + 0.7 * u(b);
  EXPECT_NEAR(e.initial.root_vel.x(), vy, 1e-12);
}

TEST(Curriculum, Validation) {
  CurriculumSchedule s;
  EXPECT_NO_THROW(validate_schedule(s));
  s.push_duration = LinearRange{0.3, 0.0, 0.1, 0.0};
  EXPECT_THROW(validate_schedule(s), ValidationError);
  s = CurriculumSchedule{};
  s.elbow = LinearRange{0.0, 1.0, 0.5, 0.0};  // crosses at p = 0.5
  EXPECT_THROW(validate_schedule(s), ValidationError);
  s = CurriculumSchedule{};
  s.push_bodies = {"tail"};
  EXPECT_THROW(check_schedule_names(s, load("sagittal.json")), ValidationError);
  s = CurriculumSchedule{};
  s.failure_fraction = 1.5;
  EXPECT_THROW(validate_schedule(s), ValidationError);
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_episode(CurriculumSchedule{}, 1.5, rng, load("sagittal.json"),
                              EpisodeMode::kPush),
               ContractViolation);
}

}  // namespace
}  // namespace safefall
