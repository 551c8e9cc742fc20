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

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "safefall/error.hpp"
#include "safefall/model/robot_model.hpp"
#include "safefall/sim/dynamics.hpp"
#include "safefall/sim/simulator.hpp"

namespace safefall {
namespace {

std::shared_ptr<const RobotModel> load(const char* file) {
  return std::make_shared<const RobotModel>(
      load_model_file(std::string(SAFEFALL_MODELS_DIR) + "/" + file));
}

std::vector<double> as_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

RobotModel single_body(double mass, double inertia) {
  RobotModel m;
  m.name = "block";
  m.kind = ModelKind::kGeneric;
  Link link;
  link.name = "block";
  link.mass = mass;
  link.inertia = inertia;
  link.contact_points = {{-0.1, -0.1}, {0.1, -0.1}};
  m.links = {link};
  m.contact_weights = {1.0};
  validate_model(m);
  return m;
}

Eigen::VectorXd generalized(const SimState& s) {
  Eigen::VectorXd out(3 + s.q.size());
  out << s.root_pose, s.q;
  return out;
}

// --- PD law --------------------------------------------------------------

TEST(PdTorque, EquilibriumAtTarget) {
  PDGains g{Eigen::Vector3d(10, 20, 30), Eigen::Vector3d(1, 2, 3)};
  const std::vector<double> q{0.1, -0.2, 0.3}, qd{0, 0, 0}, lim{100, 100, 100};
  const Eigen::VectorXd tau = pd_torque(q, q, qd, g, {false, false, false}, lim);
  EXPECT_TRUE(tau.isZero());
}

TEST(PdTorque, HandEvaluatedExample) {
  PDGains g{Eigen::VectorXd::Constant(1, 50.0), Eigen::VectorXd::Constant(1, 2.0)};
  const std::vector<double> a{0.6}, q{0.5}, qd{0.5}, lim{100};
  const Eigen::VectorXd tau = pd_torque(a, q, qd, g, {false}, lim);
  EXPECT_NEAR(tau[0], 4.0, 1e-12);
}

TEST(PdTorque, FailedJointsOutputZeroAndClamp) {
  PDGains g{Eigen::Vector2d(1000, 1000), Eigen::Vector2d(1, 1)};
  const std::vector<double> a{1, -1}, q{0, 0}, qd{3, -3}, lim{5, 7};
  EXPECT_TRUE(pd_torque(a, q, qd, g, {true, true}, lim).isZero());
  const Eigen::VectorXd tau = pd_torque(a, q, qd, g, {false, false}, lim);
  EXPECT_EQ(tau[0], 5.0);
  EXPECT_EQ(tau[1], -7.0);
}

TEST(PdTorque, LengthMismatchIsContractViolation) {
  PDGains g{Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)};
  const std::vector<double> two{0, 0}, three{0, 0, 0};
  EXPECT_THROW(pd_torque(three, two, two, g, {false, false}, two), ContractViolation);
}

// --- Contact ----------------------------------------------------------------

TEST(Contact, AboveGroundIsZero) {
  SimConfig c;
  const auto f = compute_ground_contact({{{0, 0.1}, {1, 0.0}}, {{2, 5}}},
                                        {{{1, -1}, {0, -2}}, {{0, 0}}}, c);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_TRUE(f[0].isZero());
  EXPECT_TRUE(f[1].isZero());
}

TEST(Contact, SpringLawByHand) {
  SimConfig c;
  c.ground_stiffness = 1e5;
  const auto f = compute_ground_contact({{{0, -0.001}}}, {{{0, 0}}}, c);
  EXPECT_NEAR(f[0].y(), 100.0, 1e-9);
  EXPECT_EQ(f[0].x(), 0.0);
}

TEST(Contact, NormalNeverNegativeAndFrictionBounded) {
  SimConfig c;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector2d p(u(rng), 0.05 * u(rng)), v(10 * u(rng), 10 * u(rng));
    const Eigen::Vector2d f = contact_point_force(p, v, c);
    EXPECT_GE(f.y(), 0.0);
    EXPECT_LE(std::abs(f.x()), c.friction_coefficient * f.y() + 1e-12);
  }
}

// --- Energy -------------------------------------------------------------------

TEST(Energy, ZeroStateAndSingleBody) {
  const RobotModel m = single_body(2.0, 0.1);
  SimState s = default_state(m);
  s.root_pose.setZero();
  EXPECT_EQ(mechanical_energy(s, m), 0.0);
  s.root_vel = Eigen::Vector3d(3.0, 0.0, 0.0);
  EXPECT_NEAR(mechanical_energy(s, m), 9.0, 1e-12);
}

// --- Dynamics oracles --------------------------------------------------------

// Mass matrix assembled from finite-difference body Jacobians:
// M = sum_b m_b Jv_b^T Jv_b + I_b Jw_b^T Jw_b.
TEST(Dynamics, MassMatrixMatchesJacobianOracle) {
  const auto model = load("sagittal.json");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  SimState s = default_state(*model);
  for (Eigen::Index i = 0; i < s.q.size(); ++i) s.q[i] += u(rng);
  s.root_pose[2] = u(rng);
  const Eigen::Index n = 3 + s.q.size();

  auto com_of = [&](const Eigen::VectorXd& x) {
    SimState t = s;
    t.root_pose = x.head<3>();
    t.q = x.tail(s.q.size());
    return body_motion(t, *model);
  };
  const Eigen::VectorXd x0 = generalized(s);
  const double h = 1e-6;
  const std::size_t nb = model->body_count();
  std::vector<Eigen::MatrixXd> jv(nb, Eigen::MatrixXd::Zero(2, n));
  std::vector<Eigen::RowVectorXd> jw(nb, Eigen::RowVectorXd::Zero(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[k] += h;
    xm[k] -= h;
    const BodyMotion bp = com_of(xp), bm = com_of(xm);
    for (std::size_t b = 0; b < nb; ++b) {
      jv[b].col(k) = (bp.com[b] - bm.com[b]) / (2 * h);
      jw[b][k] = (bp.angle[b] - bm.angle[b]) / (2 * h);
    }
  }
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t b = 0; b < nb; ++b) {
    const Link& link = model->links[b];
    oracle += link.mass * jv[b].transpose() * jv[b] +
              link.inertia * jw[b].transpose() * jw[b];
  }
  PlanarTree tree(*model, 9.81);
  tree.update(x0, Eigen::VectorXd::Zero(n));
  const Eigen::MatrixXd mass = tree.mass_matrix();
  EXPECT_LT((mass - oracle).norm() / oracle.norm(), 1e-7);
}

// With zero velocity the bias is the gradient of potential energy.
TEST(Dynamics, GravityBiasMatchesPotentialGradient) {
  const auto model = load("sagittal.json");
  SimState s = default_state(*model);
  s.q[1] = 0.7;
  s.root_pose[2] = 0.2;
  const Eigen::VectorXd x0 = generalized(s);
  const Eigen::Index n = x0.size();
  auto potential = [&](const Eigen::VectorXd& x) {
    SimState t = s;
    t.root_pose = x.head<3>();
    t.q = x.tail(s.q.size());
    return mechanical_energy(t, *model, 9.81);
  };
  PlanarTree tree(*model, 9.81);
  tree.update(x0, Eigen::VectorXd::Zero(n));
  const Eigen::VectorXd bias = tree.bias();
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[k] += h;
    xm[k] -= h;
    const double grad = (potential(xp) - potential(xm)) / (2 * h);
    EXPECT_NEAR(bias[k], grad, 1e-5 * (1.0 + std::abs(grad))) << k;
  }
}

// Power balance: d/dt KE = qd^T (tau - C) along the dynamics without gravity.
// Checks the velocity-product terms of the bias.
TEST(Dynamics, CoriolisTermsConserveKineticEnergy) {
  const auto model = load("sagittal.json");
  SimState s = default_state(*model);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < s.qd.size(); ++i) s.qd[i] = g(rng);
  s.root_vel = Eigen::Vector3d(g(rng), g(rng), g(rng));
  PlanarTree tree(*model, 0.0);
  Eigen::VectorXd x = generalized(s);
  Eigen::VectorXd v(x.size());
  v << s.root_vel, s.qd;
  // d/dt (1/2 v^T M v) with qdd from tau=0 must be zero.
  tree.update(x, v);
  const Eigen::VectorXd qdd = tree.forward_dynamics(Eigen::VectorXd::Zero(x.size()));
  const Eigen::MatrixXd m0 = tree.mass_matrix();
  const double h = 1e-6;
  tree.update(x + h * v, v);
  const Eigen::MatrixXd mp = tree.mass_matrix();
  tree.update(x - h * v, v);
  const Eigen::MatrixXd mm = tree.mass_matrix();
  const Eigen::MatrixXd mdot = (mp - mm) / (2 * h);
  const double power = v.dot(m0 * qdd) + 0.5 * v.dot(mdot * v);
  EXPECT_NEAR(power, 0.0, 1e-5 * v.squaredNorm());
}

// --- Simulator ----------------------------------------------------------------

TEST(Simulator, StandingStillStaysPut) {
  const auto model = load("sagittal.json");
  Simulator sim(model, SimConfig{});
  const SimState s0 = default_state(*model);
  const auto action = as_vec(model->default_pose());
  const SimState s1 = sim.step(s0, action, {});
  EXPECT_LT(std::abs(s1.root_pose.y() - s0.root_pose.y()), 1e-3);
}

TEST(Simulator, FreeBodyTranslatesExactly) {
  auto model = std::make_shared<const RobotModel>(single_body(1.5, 0.02));
  SimConfig c;
  c.gravity = 0.0;
  Simulator sim(model, c);
  SimState s = default_state(*model);
  s.root_pose = Eigen::Vector3d(0.0, 2.0, 0.0);
  s.root_vel = Eigen::Vector3d(0.75, -0.5, 0.0);
  const SimState s1 = sim.step(s, std::vector<double>{}, {});
  EXPECT_NEAR(s1.root_pose.x(), 0.75 * c.policy_dt, 1e-12);
  EXPECT_NEAR(s1.root_pose.y(), 2.0 - 0.5 * c.policy_dt, 1e-12);
  EXPECT_NEAR(s1.sim_time, c.policy_dt, 1e-12);
}

TEST(Simulator, PushIncreasesForwardVelocity) {
  const auto model = load("sagittal.json");
  Simulator sim(model, SimConfig{});
  SimState s = default_state(*model);
  const auto action = as_vec(model->default_pose());
  const std::vector<PushEvent> pushes{{750.0, 0.0, "torso", 0.0, 0.2}};
  double prev = s.root_vel.x();
  for (int k = 0; k < 10; ++k) {
    s = sim.step(s, action, pushes);
    const double vx = body_motion(s, *model).com_velocity[1].x();
    if (k > 0) {
      EXPECT_GT(s.root_vel.x(), prev) << "step " << k;
    }
    EXPECT_GT(vx, 0.0);
    prev = s.root_vel.x();
  }
}

TEST(Simulator, ConstantPushMomentumMatchesImpulse) {
  const auto model = load("sagittal.json");
  SimConfig c;
  c.gravity = 0.0;
  Simulator sim(model, c);
  SimState s = default_state(*model);
  s.root_pose.y() += 1.0;  // airborne
  const auto action = as_vec(model->default_pose());
  const std::vector<PushEvent> pushes{{300.0, 0.3, "torso", 0.0, 10.0}};
  auto momentum = [&](const SimState& st) {
    const BodyMotion bm = body_motion(st, *model);
    Eigen::Vector2d p = Eigen::Vector2d::Zero();
    for (std::size_t b = 0; b < model->body_count(); ++b) {
      p += model->links[b].mass * bm.com_velocity[b];
    }
    return p;
  };
  const Eigen::Vector2d p0 = momentum(s);
  for (int k = 0; k < 10; ++k) s = sim.step(s, action, pushes);
  const Eigen::Vector2d expected =
      300.0 * 0.2 * Eigen::Vector2d(std::cos(0.3), std::sin(0.3));
  const Eigen::Vector2d dp = momentum(s) - p0;
  EXPECT_LT((dp - expected).norm() / expected.norm(), 0.02);
}

TEST(Simulator, FreeFallConservesEnergy) {
  const auto model = load("sagittal.json");
  SimConfig c;
  c.joint_limits = false;
  Simulator sim(model, c);
  SimState s = default_state(*model);
  s.root_pose.y() += 10.0;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.5);
  for (Eigen::Index i = 0; i < s.qd.size(); ++i) s.qd[i] = g(rng);
  s.root_vel = Eigen::Vector3d(0.3, 0.0, 0.4);
  const double e0 = mechanical_energy(s, *model, c.gravity);
  const std::vector<double> action(model->dof(), 0.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    s = sim.step(s, action, {}, DriveMode::kZeroTorque);
    worst = std::max(worst, std::abs(mechanical_energy(s, *model, c.gravity) - e0));
  }
  EXPECT_LT(worst / std::abs(e0), 0.01);
  EXPECT_NEAR(s.sim_time, 1.0, 1e-9);
}

TEST(Simulator, RateCounters) {
  const auto model = load("sagittal.json");
  Simulator sim(model, SimConfig{});
  SimState s = default_state(*model);
  const auto action = as_vec(model->default_pose());
  int observed = 0;
  s = sim.step(s, action, {}, DriveMode::kPositionTargets,
               [&](const PdSample&) { ++observed; });
  s = sim.step(s, action, {});
  EXPECT_EQ(sim.counters().steps, 2);
  EXPECT_EQ(sim.counters().pd_updates, 8);
  EXPECT_EQ(sim.counters().substeps, 40);
  EXPECT_EQ(observed, 4);
}

TEST(Simulator, ZeroTorqueModeAppliesNoTorque) {
  const auto model = load("sagittal.json");
  Simulator sim(model, SimConfig{});
  SimState s = default_state(*model);
  const std::vector<double> action(model->dof(), 1.0);
  sim.step(s, action, {}, DriveMode::kZeroTorque, [](const PdSample& p) {
    EXPECT_TRUE(p.torque.isZero());
  });
}

TEST(Simulator, FailedJointReceivesNoTorque) {
  const auto model = load("sagittal.json");
  Simulator sim(model, SimConfig{});
  SimState s = default_state(*model);
  const std::size_t knee = model->joint_index("l_knee");
  s.failure_mask[knee] = true;
  const std::vector<double> action(model->dof(), 0.4);
  sim.step(s, action, {}, DriveMode::kPositionTargets, [&](const PdSample& p) {
    EXPECT_EQ(p.torque[static_cast<Eigen::Index>(knee)], 0.0);
  });
}

TEST(Simulator, PdConvergesCriticallyDamped) {
  RobotModel m = load_model_file(std::string(SAFEFALL_MODELS_DIR) + "/pendulum.json");
  const Link& pole = m.links[1];
  const double inertia = pole.inertia + pole.mass * pole.com.squaredNorm();
  m.joints[0].kp = 20.0;
  m.joints[0].kd = 2.0 * std::sqrt(m.joints[0].kp * inertia);
  m.joints[0].torque_limit = 1e3;
  auto model = std::make_shared<const RobotModel>(m);
  SimConfig c;
  c.gravity = 0.0;
  c.joint_limits = false;
  Simulator sim(model, c);
  SimState s = default_state(*model);
  s.q[0] = 0.0;
  const std::vector<double> target{1.0};
  double reached = -1.0;
  for (int k = 0; k < 50; ++k) {
    s = sim.step(s, target, {});
    if (reached < 0 && std::abs(s.q[0] - 1.0) < 0.02) reached = s.sim_time;
  }
  ASSERT_GT(reached, 0.0);
  EXPECT_LT(reached, 1.0);
  EXPECT_NEAR(s.q[0], 1.0, 0.02);
}

TEST(Simulator, Deterministic) {
  const auto model = load("sagittal.json");
  auto run = [&]() {
    Simulator sim(model, SimConfig{});
    SimState s = default_state(*model);
    std::vector<double> action = as_vec(model->default_pose());
    const std::vector<PushEvent> pushes{{400.0, std::numbers::pi, "head", 0.1, 0.2}};
    std::vector<SimState> traj;
    for (int k = 0; k < 40; ++k) {
      action[3] = 0.5 * std::sin(0.1 * k);
      s = sim.step(s, action, pushes);
      traj.push_back(s);
    }
    return traj;
  };
  EXPECT_TRUE(run() == run());
}

TEST(Simulator, ContactForcesNonNegativeDuringFall) {
  const auto model = load("sagittal.json");
  Simulator sim(model, SimConfig{});
  SimState s = default_state(*model);
  const std::vector<PushEvent> pushes{{600.0, 0.0, "torso", 0.0, 0.2}};
  const std::vector<double> action(model->dof(), 0.0);
  double peak = 0.0;
  for (int k = 0; k < 100; ++k) {
    s = sim.step(s, action, pushes, DriveMode::kZeroTorque, [&](const PdSample& p) {
      EXPECT_GE(p.contact_forces.minCoeff(), 0.0);
    });
    ASSERT_EQ(s.contact_forces.size(), static_cast<Eigen::Index>(model->body_count()));
    EXPECT_GE(s.contact_forces.minCoeff(), 0.0);
    peak = std::max(peak, s.contact_forces.maxCoeff());
  }
  EXPECT_GT(peak, 0.0);
  const double torso_z = body_motion(s, *model).com[1].y();
  EXPECT_LT(torso_z, 0.4);  // fell over
}

TEST(Simulator, NonFiniteInputsFault) {
  const auto model = load("sagittal.json");
  Simulator sim(model, SimConfig{});
  SimState s = default_state(*model);
  auto action = as_vec(model->default_pose());
  action[2] = std::nan("");
  try {
    sim.step(s, action, {});
    FAIL();
  } catch (const SimulationFault& e) {
    EXPECT_EQ(e.quantity(), "action");
  }
  action = as_vec(model->default_pose());
  s.qd[0] = INFINITY;
  try {
    sim.step(s, action, {});
    FAIL();
  } catch (const SimulationFault& e) {
    EXPECT_EQ(e.quantity(), "state.qd");
  }
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(validate_sim_config(c));
  EXPECT_EQ(c.pd_per_policy(), 4);
  EXPECT_EQ(c.substeps_per_pd(), 5);
  c.pd_dt = 0.0045;
  EXPECT_THROW(validate_sim_config(c), ValidationError);
  c = SimConfig{};
  c.substep_dt = 0.01;
  EXPECT_THROW(validate_sim_config(c), ValidationError);
  c = SimConfig{};
  c.friction_coefficient = -1;
  EXPECT_THROW(validate_sim_config(c), ValidationError);
}

}  // namespace
}  // namespace safefall
