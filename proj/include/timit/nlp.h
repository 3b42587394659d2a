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

#ifndef TIMIT_NLP_H_
#define TIMIT_NLP_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "timit/config_file.h"

namespace timit::nlp {

using Triplet = Eigen::Triplet<double>;

enum class ConstraintKind {
  kEquality,    // c(x) = 0
  kInequality,  // g(x) >= 0
};

// A group of constraint rows sharing one evaluation routine. `eval` writes
// all `rows` residuals and, when `jacobian` is non-null, appends the nonzero
// partial derivatives with block-local row indices. Duplicate (row, col)
// entries are summed.
struct ConstraintBlock {
  std::string name;
  ConstraintKind kind = ConstraintKind::kEquality;
  int rows = 0;
  std::function<void(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r,
                     std::vector<Triplet>* jacobian)>
      eval;
};

// Scalar cost with gradient. Absent means the constant-zero objective.
struct Objective {
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* gradient)>
      eval;
};

class NlpProblem {
 public:
  // Appends variables and returns the index of the first one.
  int AddVariables(int count, double initial, double lower, double upper);
  int variable_count() const { return static_cast<int>(initial_.size()); }

  Eigen::VectorXd& initial() { return initial_; }
  const Eigen::VectorXd& initial() const { return initial_; }
  Eigen::VectorXd& lower() { return lower_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  Eigen::VectorXd& upper() { return upper_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  // Optional typical magnitude per variable. When set, solver damping is
  // diag(1 / scale^2) instead of the Gauss-Newton diagonal.
  Eigen::VectorXd& scale() { return scale_; }
  const Eigen::VectorXd& scale() const { return scale_; }

  void AddBlock(ConstraintBlock block);
  const std::vector<ConstraintBlock>& blocks() const { return blocks_; }
  std::vector<ConstraintBlock>& mutable_blocks() { return blocks_; }
  int constraint_count() const;

  void SetObjective(Objective objective) { objective_ = std::move(objective); }
  const std::optional<Objective>& objective() const { return objective_; }

  // Checks dimensions, bounds ordering and block well-formedness.
  void Validate() const;

  Eigen::VectorXd Clamp(const Eigen::VectorXd& x) const;

  // Stacks every block in order. Row offsets of block k equal the sum of the
  // earlier block row counts.
  void Evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* residual,
                std::vector<Triplet>* jacobian) const;

 private:
  Eigen::VectorXd initial_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  Eigen::VectorXd scale_;
  std::vector<ConstraintBlock> blocks_;
  std::optional<Objective> objective_;
};

// Max over equality |c| and inequality max(0, -g).
double MaxViolation(const NlpProblem& problem, const Eigen::VectorXd& x);

struct BlockViolation {
  std::string name;
  double max_violation = 0.0;
  int worst_row = -1;
};
std::vector<BlockViolation> ViolationByBlock(const NlpProblem& problem,
                                             const Eigen::VectorXd& x);

struct SolverOptions {
  double feas_tol = 1e-4;
  int max_outer = 40;
  int max_inner = 200;
  double time_budget_s = 60.0;
  std::uint64_t seed = 0;
  double initial_penalty = 10.0;
  double penalty_growth = 5.0;
  // Penalty grows when violation fails to shrink below this fraction.
  double required_shrink = 0.25;
  double multiplier_bound = 1e6;
  // Inner stationarity tolerance on the projected merit gradient.
  double inner_tol = 1e-9;
  bool verbose = false;

  KeyValueConfig ToConfig() const;
  static SolverOptions FromConfig(const KeyValueConfig& config);
};

enum class SolveStatus {
  kConverged,
  kIterationLimit,
  kTimeLimit,
  kNumericalError,
};
const char* ToString(SolveStatus status);

struct SolveReport {
  SolveStatus status = SolveStatus::kIterationLimit;
  double max_violation = 0.0;
  double initial_violation = 0.0;
  int iterations = 0;        // inner (accepted + rejected) steps
  int outer_iterations = 0;
  double wall_time_s = 0.0;
  std::string message;
  // Violation after every outer iteration, starting with the initial point.
  std::vector<double> violation_history;
};

struct SolveResult {
  Eigen::VectorXd x;
  SolveReport report;
};

// Augmented-Lagrangian method. Each outer iteration minimizes the
// penalty-shifted merit over the variable box with a projected
// Levenberg-Marquardt (Gauss-Newton) method, then updates multipliers and
// the penalty. The returned point is the final iterate when converged and
// the least-violating iterate otherwise.
SolveResult Solve(const NlpProblem& problem, const SolverOptions& options);

struct JacobianCheck {
  std::string block;
  double max_rel_error = 0.0;
  int worst_row = -1;
  int worst_col = -1;
  bool flagged = false;
};

// Central finite differences against the analytic Jacobian. The relative
// error of an entry is |analytic - fd| / max(1, |analytic|).
std::vector<JacobianCheck> CheckJacobians(const NlpProblem& problem,
                                          const Eigen::VectorXd& point,
                                          double step = 1e-6,
                                          double rel_tol = 1e-4);

// Benchmark problems with known solutions, shipped for regression testing.
NlpProblem MakeBoxFeasibilityProblem();    // 1 <= x <= 2 from x = 5
NlpProblem MakeLinearEqualityProblem();    // x + y = 1, x - y = 0
NlpProblem MakeCircleEqualityProblem();    // x^2 + y^2 = 1 from (2, 0)

}  // namespace timit::nlp

#endif  // TIMIT_NLP_H_
