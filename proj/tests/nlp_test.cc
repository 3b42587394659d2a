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

#include "timit/nlp.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace timit::nlp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void ExpectConvergedContract(const SolveResult& r, const NlpProblem& p,
                             const SolverOptions& o) {
  ASSERT_EQ(r.report.status, SolveStatus::kConverged) << r.report.message;
  EXPECT_LE(r.report.max_violation, o.feas_tol);
  EXPECT_LE(MaxViolation(p, r.x), o.feas_tol);
  ASSERT_FALSE(r.report.violation_history.empty());
  EXPECT_LE(r.report.violation_history.back(),
            r.report.violation_history.front());
}

// Quadratic block r = x^T A x + b^T x with a known Jacobian.
NlpProblem QuadraticProblem() {
  NlpProblem p;
  p.AddVariables(3, 0.0, -kInf, kInf);
  p.initial() << 0.3, -0.7, 1.1;
  ConstraintBlock q;
  q.name = "quad";
  q.rows = 2;
  q.eval = [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r,
              std::vector<Triplet>* jac) {
    r[0] = x[0] * x[1] + 2 * x[2] * x[2];
    r[1] = x[0] * x[0] - x[1];
    if (jac) {
      jac->emplace_back(0, 0, x[1]);
      jac->emplace_back(0, 1, x[0]);
      jac->emplace_back(0, 2, 4 * x[2]);
      jac->emplace_back(1, 0, 2 * x[0]);
      jac->emplace_back(1, 1, -1.0);
    }
  };
  p.AddBlock(q);
  return p;
}

TEST(NlpTest, BoxFeasibility) {
  const NlpProblem p = MakeBoxFeasibilityProblem();
  const SolverOptions o;
  const SolveResult r = Solve(p, o);
  ExpectConvergedContract(r, p, o);
  EXPECT_GE(r.x[0], 1.0 - 1e-4);
  EXPECT_LE(r.x[0], 2.0 + 1e-4);
}

TEST(NlpTest, LinearEquality) {
  const NlpProblem p = MakeLinearEqualityProblem();
  SolverOptions o;
  const SolveResult r = Solve(p, o);
  ExpectConvergedContract(r, p, o);
  EXPECT_NEAR(r.x[0], 0.5, 1e-6);
  EXPECT_NEAR(r.x[1], 0.5, 1e-6);
}

TEST(NlpTest, CircleEquality) {
  const NlpProblem p = MakeCircleEqualityProblem();
  const SolverOptions o;
  const SolveResult r = Solve(p, o);
  ExpectConvergedContract(r, p, o);
  EXPECT_LE(std::abs(r.x.squaredNorm() - 1.0), 1e-4);
}

TEST(NlpTest, VariableBoundsAreRespected) {
  NlpProblem p = MakeLinearEqualityProblem();
  p.lower() << -kInf, 0.6;
  p.upper() << kInf, 1.0;
  // x + y = 1, x - y = 0 is now infeasible; the solver must stay in bounds.
  SolverOptions o;
  o.max_outer = 5;
  const SolveResult r = Solve(p, o);
  EXPECT_NE(r.report.status, SolveStatus::kConverged);
  EXPECT_GE(r.x[1], 0.6);
  EXPECT_LE(r.x[1], 1.0);
}

TEST(NlpTest, Deterministic) {
  const NlpProblem p = MakeCircleEqualityProblem();
  SolverOptions o;
  o.seed = 5;
  const SolveResult a = Solve(p, o), b = Solve(p, o);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.report.iterations, b.report.iterations);
}

TEST(NlpTest, NonFiniteResidualNamesBlock) {
  NlpProblem p = MakeLinearEqualityProblem();
  ConstraintBlock bad;
  bad.name = "poison";
  bad.rows = 1;
  bad.eval = [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r,
                std::vector<Triplet>*) { r[0] = std::log(-1.0 - x[0] * x[0]); };
  p.AddBlock(bad);
  const SolveResult r = Solve(p, SolverOptions());
  EXPECT_EQ(r.report.status, SolveStatus::kNumericalError);
  EXPECT_NE(r.report.message.find("poison"), std::string::npos);
}

TEST(NlpTest, EvaluateStacksBlocks) {
  NlpProblem p = MakeLinearEqualityProblem();
  const NlpProblem circle = MakeCircleEqualityProblem();
  p.AddBlock(circle.blocks()[0]);
  Eigen::VectorXd x(2);
  x << 0.25, 2.0;
  Eigen::VectorXd r;
  std::vector<Triplet> jac;
  p.Evaluate(x, &r, &jac);
  ASSERT_EQ(r.size(), 3);
  EXPECT_DOUBLE_EQ(r[0], 1.25);
  EXPECT_DOUBLE_EQ(r[1], -1.75);
  EXPECT_DOUBLE_EQ(r[2], 0.0625 + 4.0 - 1.0);
  bool found = false;
  for (const auto& t : jac) {
    if (t.row() == 2 && t.col() == 1) {
      EXPECT_DOUBLE_EQ(t.value(), 4.0);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(NlpTest, ValidateCatchesInvertedBounds) {
  NlpProblem p = MakeLinearEqualityProblem();
  p.lower()[0] = 3.0;
  p.upper()[0] = 1.0;
  EXPECT_THROW(p.Validate(), std::exception);
}

TEST(JacobianCheckTest, LinearBlockNearMachineEpsilon) {
  const NlpProblem p = MakeLinearEqualityProblem();
  const auto checks = CheckJacobians(p, p.initial());
  ASSERT_EQ(checks.size(), 1u);
  // Only residual rounding remains: about eps * |r| / h.
  Eigen::VectorXd r;
  p.Evaluate(p.initial(), &r, nullptr);
  EXPECT_LT(checks[0].max_rel_error,
            8 * std::numeric_limits<double>::epsilon() *
                std::max(1.0, r.lpNorm<Eigen::Infinity>()) / 1e-6);
  EXPECT_FALSE(checks[0].flagged);
}

TEST(JacobianCheckTest, QuadraticBlock) {
  const NlpProblem p = QuadraticProblem();
  const auto checks = CheckJacobians(p, p.initial(), 1e-6, 1e-4);
  EXPECT_LT(checks[0].max_rel_error, 1e-6);
}

TEST(JacobianCheckTest, CorruptedEntryFlagged) {
  NlpProblem p = QuadraticProblem();
  auto inner = p.blocks()[0].eval;
  p.mutable_blocks()[0].eval = [inner](const Eigen::VectorXd& x,
                                       Eigen::Ref<Eigen::VectorXd> r,
                                       std::vector<Triplet>* jac) {
    inner(x, r, jac);
    if (jac) jac->emplace_back(1, 2, 0.01);
  };
  const auto checks = CheckJacobians(p, p.initial());
  EXPECT_TRUE(checks[0].flagged);
  EXPECT_GT(checks[0].max_rel_error, 1e-4);
  EXPECT_EQ(checks[0].worst_row, 1);
  EXPECT_EQ(checks[0].worst_col, 2);
}

TEST(SolverOptionsTest, ConfigRoundTrip) {
  SolverOptions o;
  o.feas_tol = 3e-5;
  o.max_outer = 17;
  o.time_budget_s = 12.5;
  const SolverOptions n = SolverOptions::FromConfig(o.ToConfig());
  EXPECT_DOUBLE_EQ(n.feas_tol, 3e-5);
  EXPECT_EQ(n.max_outer, 17);
  EXPECT_DOUBLE_EQ(n.time_budget_s, 12.5);
}

}  // namespace
}  // namespace timit::nlp
