// Copyright 2026 DeepMind Technologies Limited
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

#include "timit/planner.h"

#include <chrono>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "timit/heightfield.h"
#include "timit/nlp.h"

namespace timit {
namespace {

HeightField FlatTerrain() {
  const HeightField patch = GenerateTerrain(0);
  return EmbedCentered(HeightField::Flat(16, 16, patch.cell_size(),
                                         patch.origin(), 0.0),
                       46, 46)
      .field;
}

PlannerConfig ShortTrot() {
  PlannerConfig c;
  c.horizon = 2.0;
  c.goal_displacement = {0.5, 0.0};
  return c;
}

PlannerConfig Standing() {
  PlannerConfig c;
  c.horizon = 2.0;
  c.goal_displacement = {0.0, 0.0};
  c.gait = Gait::kStand;
  c.init_pos_noise_sigma = 0.0;
  return c;
}

double BlockViolation(const nlp::NlpProblem& p, const Eigen::VectorXd& x,
                      const std::string& name) {
  for (const auto& b : nlp::ViolationByBlock(p, x)) {
    if (b.name == name) return b.max_violation;
  }
  ADD_FAILURE() << "no block " << name;
  return 0.0;
}

TEST(PlannerConfigTest, RoundTripAndValidation) {
  PlannerConfig c = ShortTrot();
  c.gait = Gait::kStand;
  c.solver.feas_tol = 2e-5;
  const PlannerConfig d = PlannerConfig::FromConfig(c.ToConfig());
  EXPECT_DOUBLE_EQ(d.horizon, 2.0);
  EXPECT_DOUBLE_EQ(d.goal_displacement.x(), 0.5);
  EXPECT_EQ(d.gait, Gait::kStand);
  EXPECT_DOUBLE_EQ(d.solver.feas_tol, 2e-5);
  EXPECT_EQ(d.ToConfig().ToString(), c.ToConfig().ToString());
  PlannerConfig bad;
  bad.force_constraint_dt = 5.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = PlannerConfig();
  bad.init_pos_noise_sigma = -1.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
}

TEST(PlannerConfigTest, ForceBoundDefaultsToTwiceWeight) {
  const RobotModel m;
  EXPECT_DOUBLE_EQ(PlannerConfig().ForceMax(m), 2.0 * 30.0 * 9.81);
}

TEST(ScheduleTest, TrotPairsDiagonalsAndSumsToHorizon) {
  for (double T : {2.0, 4.6}) {
    PlannerConfig c;
    c.horizon = T;
    const PhaseSchedule s = TrotSchedule(c);
    EXPECT_NO_THROW(s.Validate(c.min_phase_duration, c.max_phase_duration, T));
    EXPECT_EQ(s.durations[kLF], s.durations[kRH]);
    EXPECT_EQ(s.durations[kRF], s.durations[kLH]);
    EXPECT_NE(s.durations[kLF], s.durations[kRF]);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      EXPECT_TRUE(s.IsStancePhase(leg, 0));
      EXPECT_TRUE(s.IsStancePhase(leg, s.phase_count(leg) - 1));
    }
  }
  PlannerConfig c;
  EXPECT_EQ(TrotSchedule(c).phase_count(kLF), 9);  // 5 stance + 4 swing
}

TEST(ProblemTest, VariableCountByConstruction) {
  // T = 2 trot: 2 swings per leg, i.e. 3 stance and 2 swing phases.
  // Body: 2 splines x 11 nodes x 6. Per leg: 3 stance feet x 3,
  // 2 swings x 2 interior nodes x 6, 3 stance x 4 force nodes x 6, and
  // 5 durations.
  const int expected = 2 * 11 * 6 + 4 * (3 * 3 + 2 * 2 * 6 + 3 * 4 * 6 + 5);
  const CentroidalProblem p(FlatTerrain(), RobotModel(), ShortTrot());
  EXPECT_EQ(p.nlp().variable_count(), expected);
  EXPECT_EQ(p.layout().total, expected);
  EXPECT_EQ(VariableLayout::ExpectedCount(ShortTrot(), p.nominal_schedule()),
            expected);
}

TEST(ProblemTest, StaticStandingSatisfiesEverything) {
  PlannerConfig c = Standing();
  c.init_force_noise_sigma = 0.0;
  const CentroidalProblem p(FlatTerrain(), RobotModel(), c);
  const Eigen::VectorXd x = p.Nominal();
  EXPECT_LT(nlp::MaxViolation(p.nlp(), x), 1e-9);
  const CentroidalSolution s = p.Extract(x);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector3d f = s.forces[leg].Eval(1.0).pos;
    EXPECT_NEAR(f.z(), 30.0 * 9.81 / 4, 1e-12);
    EXPECT_NEAR(f.head<2>().norm(), 0.0, 1e-12);
  }
}

TEST(ProblemTest, NegativeNormalForceBetweenNodesIsViolated) {
  PlannerConfig c = Standing();
  c.init_force_noise_sigma = 0.0;
  c.horizon = 0.9;
  c.com_segments = 3;
  c.force_segments = 1;
  const CentroidalProblem p(FlatTerrain(), RobotModel(), c);
  Eigen::VectorXd x = p.Nominal();
  // Single force segment from 200 N to 200 N, with node slopes pulling it
  // below zero in between.
  const int f0 = p.layout().legs[kLF].force[0];
  x[f0 + 2] = 200.0;
  x[f0 + 5] = -8000.0;
  x[f0 + 6 + 2] = 200.0;
  x[f0 + 6 + 5] = 0.0;
  const CentroidalSolution s = p.Extract(x);
  ASSERT_LT(s.forces[kLF].Eval(0.04).pos.z(), 0.0);
  ASSERT_LT(s.forces[kLF].Eval(0.16).pos.z(), 0.0);
  EXPECT_EQ(BlockViolation(p.nlp(), x, "force_nodes"), 0.0);
  EXPECT_GT(BlockViolation(p.nlp(), x, "force_grid"), 0.0);
}

TEST(ProblemTest, OffTerrainGoalRejected) {
  PlannerConfig c = ShortTrot();
  c.goal_displacement = {10.0, 0.0};
  EXPECT_THROW(CentroidalProblem(FlatTerrain(), RobotModel(), c), PlannerError);
}

TEST(InitializationTest, ZeroSigmasIdenticalAcrossSeeds) {
  PlannerConfig c = ShortTrot();
  c.init_pos_noise_sigma = 0.0;
  c.init_force_noise_sigma = 0.0;
  const CentroidalProblem p(FlatTerrain(), RobotModel(), c);
  EXPECT_EQ(p.Initialize(1), p.Initialize(2));
  EXPECT_EQ(p.Initialize(1), p.Nominal());
}

TEST(InitializationTest, NoiseStatisticsAndPhaseSums) {
  const PlannerConfig c = ShortTrot();
  const CentroidalProblem p(FlatTerrain(), RobotModel(), c);
  const Eigen::VectorXd nominal = p.Nominal();
  EXPECT_NE(p.Initialize(1), p.Initialize(2));
  const int com_x = p.layout().com + 6 * 5;              // interior CoM node
  const int foot_y = p.layout().legs[kRF].foot[2] + 1;     // middle stance
  const int force_z = p.layout().legs[kLH].force[0] + 2;   // first force node
  double s_com = 0.0, s_foot = 0.0, s_force = 0.0;
  const int n = 1000;
  for (int seed = 0; seed < n; ++seed) {
    const Eigen::VectorXd x = p.Initialize(seed);
    s_com += std::pow(x[com_x] - nominal[com_x], 2);
    s_foot += std::pow(x[foot_y] - nominal[foot_y], 2);
    s_force += std::pow(x[force_z] - nominal[force_z], 2);
    if (seed < 50) {
      for (int leg = 0; leg < kNumLegs; ++leg) {
        const auto& l = p.layout().legs[leg];
        double sum = 0.0;
        for (int j = 0; j < l.phase_count(); ++j) sum += x[l.durations + j];
        EXPECT_NEAR(sum, c.horizon, 1e-12);
      }
    }
  }
  EXPECT_NEAR(std::sqrt(s_com / n), 0.10, 0.01);
  EXPECT_NEAR(std::sqrt(s_foot / n), 0.10, 0.01);
  EXPECT_NEAR(std::sqrt(s_force / n), 5.0, 0.5);
}

TEST(JacobianTest, AllBlocksMatchFiniteDifferences) {
  const CentroidalProblem flat(FlatTerrain(), RobotModel(), ShortTrot());
  const HeightField rough = EmbedCentered(GenerateTerrain(3), 46, 46).field;
  const CentroidalProblem bumpy(rough, RobotModel(), ShortTrot());
  for (const CentroidalProblem* p : {&flat, &bumpy}) {
    for (std::uint64_t seed : {1u, 2u}) {
      for (const auto& check : nlp::CheckJacobians(p->nlp(), p->Initialize(seed))) {
        EXPECT_FALSE(check.flagged)
            << check.block << " " << check.max_rel_error << " row "
            << check.worst_row << " col " << check.worst_col;
      }
    }
  }
}

TEST(PlanTest, FlatShortTrotConvergesAndPassesAudit) {
  const HeightField terrain = FlatTerrain();
  const RobotModel model;
  const PlannerConfig c = ShortTrot();
  const CentroidalSolution s = Plan(terrain, model, c, 1);
  ASSERT_TRUE(s.converged()) << s.report.message;
  EXPECT_LE(s.report.max_violation, c.solver.feas_tol);
  const AuditReport a = AuditSolution(s, terrain, model, c);
  EXPECT_LE(a.max_residual, 1e-3) << a.Summary();
  EXPECT_GE(a.min_normal_force_fine, -0.05 * a.force_max);
  EXPECT_GE(a.min_swing_clearance_fine, -0.01);
  EXPECT_LT(a.max_stance_drift, 1e-6);
  EXPECT_NEAR(s.com.Eval(2.0).pos.x() - s.com.Eval(0.0).pos.x(), 0.5, 1e-3);
}

TEST(PlanTest, StandingIsFeasible) {
  const HeightField terrain = FlatTerrain();
  const RobotModel model;
  PlannerConfig c = Standing();
  const CentroidalSolution s = Plan(terrain, model, c, 3);
  ASSERT_TRUE(s.converged()) << s.report.message;
  EXPECT_LE(AuditSolution(s, terrain, model, c).max_residual, 1e-3);
}

TEST(PlanTest, ProceduralSeedIsReproducible) {
  const HeightField terrain = EmbedCentered(GenerateTerrain(7), 46, 46).field;
  PlannerConfig c = ShortTrot();
  c.solver.max_outer = 5;
  const CentroidalSolution a = Plan(terrain, RobotModel(), c, 7);
  const CentroidalSolution b = Plan(terrain, RobotModel(), c, 7);
  EXPECT_EQ(a.variables, b.variables);
  EXPECT_EQ(a.report.status, b.report.status);
}

TEST(SolutionTest, ConfigRoundTrip) {
  const CentroidalProblem p(FlatTerrain(), RobotModel(), ShortTrot());
  const CentroidalSolution s = p.Extract(p.Initialize(4));
  const CentroidalSolution r = CentroidalSolution::FromConfig(s.ToConfig());
  for (double t : {0.0, 0.37, 1.5, 2.0}) {
    EXPECT_EQ(r.com.Eval(t).pos, s.com.Eval(t).pos);
    EXPECT_EQ(r.feet[kRH].Eval(t).pos, s.feet[kRH].Eval(t).pos);
    EXPECT_EQ(r.forces[kLF].Eval(t).pos, s.forces[kLF].Eval(t).pos);
  }
  EXPECT_EQ(r.schedule.durations, s.schedule.durations);
}

}  // namespace
}  // namespace timit
