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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "timit/random.h"

namespace timit::nlp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Evaluation {
  Eigen::VectorXd c;              // raw constraint values
  std::vector<Triplet> jacobian;  // raw constraint Jacobian
  double objective = 0.0;
  Eigen::VectorXd objective_gradient;
  double violation = 0.0;
};

// Row kinds expanded once so the inner loop does not walk blocks.
std::vector<bool> InequalityRows(const NlpProblem& problem) {
  std::vector<bool> ineq;
  ineq.reserve(problem.constraint_count());
  for (const auto& block : problem.blocks()) {
    ineq.insert(ineq.end(), block.rows,
                block.kind == ConstraintKind::kInequality);
  }
  return ineq;
}

double Violation(const Eigen::VectorXd& c, const std::vector<bool>& ineq) {
  double v = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    v = std::max(v, ineq[i] ? std::max(0.0, -c[i]) : std::abs(c[i]));
  }
  return v;
}

void EvaluateChecked(const NlpProblem& problem, const Eigen::VectorXd& x,
                     bool with_jacobian, const std::vector<bool>& ineq,
                     Evaluation* out) {
  out->c.resize(problem.constraint_count());
  out->jacobian.clear();
  int offset = 0;
  for (const auto& block : problem.blocks()) {
    std::vector<Triplet> local;
    block.eval(x, out->c.segment(offset, block.rows),
               with_jacobian ? &local : nullptr);
    if (!out->c.segment(offset, block.rows).allFinite()) {
      throw NumericalError("non-finite residual in block '" + block.name +
                           "'");
    }
    for (const auto& t : local) {
      if (!std::isfinite(t.value())) {
        throw NumericalError("non-finite Jacobian entry in block '" +
                             block.name + "'");
      }
      out->jacobian.emplace_back(t.row() + offset, t.col(), t.value());
    }
    offset += block.rows;
  }
  out->objective = 0.0;
  out->objective_gradient = Eigen::VectorXd::Zero(x.size());
  if (problem.objective()) {
    out->objective = problem.objective()->eval(
        x, with_jacobian ? &out->objective_gradient : nullptr);
    if (!std::isfinite(out->objective)) {
      throw NumericalError("non-finite objective value");
    }
  }
  out->violation = Violation(out->c, ineq);
}

// Penalty-shifted merit: 0.5 * sum(r_i^2) + f with
//   equality   r_i = sqrt(rho) * (c_i + lambda_i / rho)
//   inequality r_i = sqrt(rho) * max(0, mu_i / rho - g_i).
struct Merit {
  double value = 0.0;
  Eigen::VectorXd r;
  std::vector<bool> active;
};

Merit ComputeMerit(const Evaluation& e, const std::vector<bool>& ineq,
                   const Eigen::VectorXd& multipliers, double rho) {
  Merit m;
  const int rows = static_cast<int>(e.c.size());
  m.r.resize(rows);
  m.active.assign(rows, true);
  const double sqrt_rho = std::sqrt(rho);
  for (int i = 0; i < rows; ++i) {
    if (ineq[i]) {
      const double shifted = multipliers[i] / rho - e.c[i];
      m.active[i] = shifted > 0.0;
      m.r[i] = m.active[i] ? sqrt_rho * shifted : 0.0;
    } else {
      m.r[i] = sqrt_rho * (e.c[i] + multipliers[i] / rho);
    }
  }
  m.value = 0.5 * m.r.squaredNorm() + e.objective;
  return m;
}

class Clock {
 public:
  Clock() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

// ---------------------------------------------------------------------------
// NlpProblem.

int NlpProblem::AddVariables(int count, double initial, double lower,
                             double upper) {
  const int first = variable_count();
  const int n = first + count;
  initial_.conservativeResize(n);
  lower_.conservativeResize(n);
  upper_.conservativeResize(n);
  initial_.tail(count).setConstant(initial);
  lower_.tail(count).setConstant(lower);
  upper_.tail(count).setConstant(upper);
  if (scale_.size() != 0) {
    scale_.conservativeResize(n);
    scale_.tail(count).setOnes();
  }
  return first;
}

void NlpProblem::AddBlock(ConstraintBlock block) {
  blocks_.push_back(std::move(block));
}

int NlpProblem::constraint_count() const {
  int rows = 0;
  for (const auto& b : blocks_) rows += b.rows;
  return rows;
}

void NlpProblem::Validate() const {
  const int n = variable_count();
  if (lower_.size() != n || upper_.size() != n ||
      (scale_.size() != 0 && scale_.size() != n)) {
    throw std::invalid_argument("nlp: bound vector size mismatch");
  }
  for (int i = 0; i < n; ++i) {
    if (lower_[i] > upper_[i]) {
      throw std::invalid_argument("nlp: lower bound above upper bound at " +
                                  std::to_string(i));
    }
  }
  for (const auto& b : blocks_) {
    if (b.rows < 0 || !b.eval) {
      throw std::invalid_argument("nlp: malformed block '" + b.name + "'");
    }
  }
}

Eigen::VectorXd NlpProblem::Clamp(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

void NlpProblem::Evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* residual,
                          std::vector<Triplet>* jacobian) const {
  Eigen::VectorXd r(constraint_count());
  if (jacobian) jacobian->clear();
  int offset = 0;
  for (const auto& block : blocks_) {
    std::vector<Triplet> local;
    block.eval(x, r.segment(offset, block.rows), jacobian ? &local : nullptr);
    if (jacobian) {
      for (const auto& t : local) {
        jacobian->emplace_back(t.row() + offset, t.col(), t.value());
      }
    }
    offset += block.rows;
  }
  if (residual) *residual = std::move(r);
}

double MaxViolation(const NlpProblem& problem, const Eigen::VectorXd& x) {
  Eigen::VectorXd c;
  problem.Evaluate(x, &c, nullptr);
  return Violation(c, InequalityRows(problem));
}

std::vector<BlockViolation> ViolationByBlock(const NlpProblem& problem,
                                             const Eigen::VectorXd& x) {
  std::vector<BlockViolation> out;
  for (const auto& block : problem.blocks()) {
    Eigen::VectorXd r(block.rows);
    block.eval(x, r, nullptr);
    BlockViolation v{block.name, 0.0, -1};
    for (int i = 0; i < block.rows; ++i) {
      const double viol = block.kind == ConstraintKind::kInequality
                              ? std::max(0.0, -r[i])
                              : std::abs(r[i]);
      if (viol > v.max_violation) {
        v.max_violation = viol;
        v.worst_row = i;
      }
    }
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Options.

KeyValueConfig SolverOptions::ToConfig() const {
  KeyValueConfig c;
  c.SetDouble("feas_tol", feas_tol);
  c.SetInt("max_outer", max_outer);
  c.SetInt("max_inner", max_inner);
  c.SetDouble("time_budget_s", time_budget_s);
  c.SetInt("seed", static_cast<long long>(seed));
  return c;
}

SolverOptions SolverOptions::FromConfig(const KeyValueConfig& c) {
  SolverOptions o;
  o.feas_tol = c.GetDouble("feas_tol", o.feas_tol);
  o.max_outer = c.GetInt("max_outer", o.max_outer);
  o.max_inner = c.GetInt("max_inner", o.max_inner);
  o.time_budget_s = c.GetDouble("time_budget_s", o.time_budget_s);
  o.seed = static_cast<std::uint64_t>(c.GetInt("seed", 0));
  if (!(o.feas_tol > 0.0) || o.max_outer < 1 || o.max_inner < 1 ||
      !(o.time_budget_s > 0.0)) {
    throw ConfigError("solver options out of range");
  }
  return o;
}

const char* ToString(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kIterationLimit:
      return "iteration-limit";
    case SolveStatus::kTimeLimit:
      return "time-limit";
    case SolveStatus::kNumericalError:
      return "numerical-error";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Solver.

namespace {

enum class InnerExit { kStationary, kFeasible, kStalled, kIterations, kTime };

class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const NlpProblem& problem, const SolverOptions& options)
      : problem_(problem),
        options_(options),
        ineq_(InequalityRows(problem)),
        n_(problem.variable_count()),
        m_(problem.constraint_count()),
        rng_(options.seed) {}

  SolveResult Run();

 private:
  InnerExit Minimize(Eigen::VectorXd& x, Evaluation& eval);
  bool TimeUp() const { return clock_.Seconds() > options_.time_budget_s; }

  const NlpProblem& problem_;
  const SolverOptions& options_;
  const std::vector<bool> ineq_;
  const int n_;
  const int m_;
  Eigen::VectorXd multipliers_;
  double rho_ = 10.0;
  int iterations_ = 0;
  Clock clock_;
  Rng rng_;
};

InnerExit AugmentedLagrangian::Minimize(Eigen::VectorXd& x, Evaluation& eval) {
  const auto& lower = problem_.lower();
  const auto& upper = problem_.upper();
  const bool has_objective = problem_.objective().has_value();
  Merit merit = ComputeMerit(eval, ineq_, multipliers_, rho_);
  double damping = -1.0;
  double nu = 2.0;
  const double sqrt_rho = std::sqrt(rho_);
  Evaluation trial;
  int stalls = 0;

  for (int it = 0; it < options_.max_inner; ++it) {
    if (TimeUp()) return InnerExit::kTime;
    if (!has_objective && eval.violation <= 0.5 * options_.feas_tol) {
      return InnerExit::kFeasible;
    }

    // Gradient of the merit: J_r^T r + grad f.
    Eigen::VectorXd gradient = eval.objective_gradient;
    for (const auto& t : eval.jacobian) {
      const int i = t.row();
      if (!merit.active[i]) continue;
      const double scale = ineq_[i] ? -sqrt_rho : sqrt_rho;
      gradient[t.col()] += scale * t.value() * merit.r[i];
    }

    // Free variables: not fixed, not pinned at a bound by the gradient.
    std::vector<int> free_index(n_, -1);
    int n_free = 0;
    double projected_gradient = 0.0;
    for (int j = 0; j < n_; ++j) {
      const double pg =
          std::clamp(x[j] - gradient[j], lower[j], upper[j]) - x[j];
      projected_gradient = std::max(projected_gradient, std::abs(pg));
      if (lower[j] == upper[j]) continue;
      const bool at_lower = x[j] <= lower[j] && gradient[j] > 0.0;
      const bool at_upper = x[j] >= upper[j] && gradient[j] < 0.0;
      if (at_lower || at_upper) continue;
      free_index[j] = n_free++;
    }
    if (projected_gradient < options_.inner_tol || n_free == 0) {
      return InnerExit::kStationary;
    }

    // Gauss-Newton matrix on the free variables.
    std::vector<int> active_rows(m_, -1);
    int n_active = 0;
    for (int i = 0; i < m_; ++i) {
      if (merit.active[i]) active_rows[i] = n_active++;
    }
    std::vector<Triplet> jr;
    jr.reserve(eval.jacobian.size());
    for (const auto& t : eval.jacobian) {
      const int row = active_rows[t.row()];
      const int col = free_index[t.col()];
      if (row < 0 || col < 0) continue;
      const double scale = ineq_[t.row()] ? -sqrt_rho : sqrt_rho;
      jr.emplace_back(row, col, scale * t.value());
    }
    Eigen::SparseMatrix<double> J(n_active, n_free);
    J.setFromTriplets(jr.begin(), jr.end());
    Eigen::SparseMatrix<double> H = J.transpose() * J;
    Eigen::VectorXd g_free(n_free);
    for (int j = 0; j < n_; ++j) {
      if (free_index[j] >= 0) g_free[free_index[j]] = gradient[j];
    }
    Eigen::VectorXd diag = H.diagonal();
    if (problem_.scale().size() == n_) {
      for (int j = 0; j < n_; ++j) {
        if (free_index[j] >= 0) {
          diag[free_index[j]] = 1.0 / (problem_.scale()[j] * problem_.scale()[j]);
        }
      }
      if (damping < 0.0) damping = 1e-4 * H.diagonal().mean() / diag.mean();
    } else {
      for (int k = 0; k < n_free; ++k) diag[k] = std::max(diag[k], 1e-6);
      if (damping < 0.0) damping = 1e-4;
    }

    bool accepted = false;
    while (!accepted) {
      if (TimeUp()) return InnerExit::kTime;
      Eigen::SparseMatrix<double> A = H;
      for (int k = 0; k < n_free; ++k) {
        A.coeffRef(k, k) += damping * diag[k];
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      if (ldlt.info() != Eigen::Success) {
        damping *= nu;
        nu *= 2.0;
        if (damping > 1e16) return InnerExit::kStalled;
        continue;
      }
      const Eigen::VectorXd step_free = ldlt.solve(-g_free);
      Eigen::VectorXd candidate = x;
      for (int j = 0; j < n_; ++j) {
        if (free_index[j] >= 0) candidate[j] += step_free[free_index[j]];
      }
      candidate = problem_.Clamp(candidate);
      const Eigen::VectorXd step = candidate - x;
      Eigen::VectorXd step_on_free(n_free);
      for (int j = 0; j < n_; ++j) {
        if (free_index[j] >= 0) step_on_free[free_index[j]] = step[j];
      }
      const double predicted =
          -(g_free.dot(step_on_free) +
            0.5 * (J * step_on_free).squaredNorm());
      ++iterations_;
      EvaluateChecked(problem_, candidate, true, ineq_, &trial);
      Merit trial_merit = ComputeMerit(trial, ineq_, multipliers_, rho_);
      const double actual = merit.value - trial_merit.value;
      const double ratio = predicted > 0.0 ? actual / predicted : -1.0;
      if (ratio > 1e-4 && actual > 0.0) {
        x = candidate;
        std::swap(eval, trial);
        merit = std::move(trial_merit);
        damping *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * ratio - 1.0, 3));
        damping = std::max(damping, 1e-12);
        nu = 2.0;
        accepted = true;
        const double rel_change =
            actual / std::max(1e-300, std::abs(merit.value) + actual);
        stalls = rel_change < 1e-12 ? stalls + 1 : 0;
        if (stalls >= 5) return InnerExit::kStalled;
      } else {
        damping *= nu;
        nu *= 2.0;
        if (damping > 1e16 || step.lpNorm<Eigen::Infinity>() < 1e-15) {
          return InnerExit::kStalled;
        }
      }
      if (iterations_ > options_.max_inner * options_.max_outer) {
        return InnerExit::kIterations;
      }
    }
  }
  return InnerExit::kIterations;
}

SolveResult AugmentedLagrangian::Run() {
  problem_.Validate();
  SolveResult result;
  auto& report = result.report;
  Eigen::VectorXd x = problem_.Clamp(problem_.initial());
  multipliers_ = Eigen::VectorXd::Zero(m_);
  rho_ = options_.initial_penalty;
  Evaluation eval;

  Eigen::VectorXd best_x = x;
  double best_violation = kInf;
  try {
    EvaluateChecked(problem_, x, true, ineq_, &eval);
    report.initial_violation = eval.violation;
    report.violation_history.push_back(eval.violation);
    best_violation = eval.violation;
    report.status = SolveStatus::kIterationLimit;

    for (int outer = 0; outer < options_.max_outer; ++outer) {
      report.outer_iterations = outer + 1;
      const double previous = eval.violation;
      const InnerExit exit = Minimize(x, eval);
      report.violation_history.push_back(eval.violation);
      if (eval.violation < best_violation) {
        best_violation = eval.violation;
        best_x = x;
      }
      if (options_.verbose) {
        std::fprintf(stderr,
                     "[al] outer %d rho %.3g violation %.3e iters %d (%.2fs)\n",
                     outer, rho_, eval.violation, iterations_,
                     clock_.Seconds());
      }
      const bool has_objective = problem_.objective().has_value();
      if (eval.violation <= options_.feas_tol &&
          (!has_objective || exit == InnerExit::kStationary ||
           exit == InnerExit::kStalled)) {
        report.status = SolveStatus::kConverged;
        break;
      }
      if (exit == InnerExit::kTime || TimeUp()) {
        report.status = SolveStatus::kTimeLimit;
        break;
      }
      if (iterations_ > options_.max_inner * options_.max_outer) break;

      // First-order multiplier update.
      for (int i = 0; i < m_; ++i) {
        double updated = ineq_[i] ? std::max(0.0, multipliers_[i] -
                                                      rho_ * eval.c[i])
                                  : multipliers_[i] + rho_ * eval.c[i];
        multipliers_[i] = std::clamp(updated, -options_.multiplier_bound,
                                     options_.multiplier_bound);
      }
      if (eval.violation > options_.required_shrink * previous) {
        rho_ = std::min(rho_ * options_.penalty_growth, 1e10);
      }
      if (exit == InnerExit::kStalled && eval.violation > options_.feas_tol) {
        // Nudge off a stationary point of the penalty merit.
        for (int j = 0; j < n_; ++j) {
          if (problem_.lower()[j] == problem_.upper()[j]) continue;
          x[j] += rng_.Normal(1e-4 * (1.0 + std::abs(x[j])));
        }
        x = problem_.Clamp(x);
        EvaluateChecked(problem_, x, true, ineq_, &eval);
      }
    }
  } catch (const NumericalError& e) {
    report.status = SolveStatus::kNumericalError;
    report.message = e.what();
  }

  report.iterations = iterations_;
  report.wall_time_s = clock_.Seconds();
  if (report.status == SolveStatus::kConverged) {
    result.x = x;
    report.max_violation = eval.violation;
  } else {
    result.x = best_x;
    report.max_violation = best_violation;
    if (report.message.empty()) {
      report.message = std::string("stopped: ") + ToString(report.status);
    }
  }
  return result;
}

}  // namespace

SolveResult Solve(const NlpProblem& problem, const SolverOptions& options) {
  AugmentedLagrangian solver(problem, options);
  return solver.Run();
}

// ---------------------------------------------------------------------------
// Derivative checks.

std::vector<JacobianCheck> CheckJacobians(const NlpProblem& problem,
                                          const Eigen::VectorXd& point,
                                          double step, double rel_tol) {
  const int n = problem.variable_count();
  const int m = problem.constraint_count();
  std::vector<Triplet> triplets;
  problem.Evaluate(point, nullptr, &triplets);
  Eigen::SparseMatrix<double> analytic(m, n);
  analytic.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::MatrixXd dense = Eigen::MatrixXd(analytic);

  Eigen::MatrixXd fd(m, n);
  Eigen::VectorXd plus, minus;
  Eigen::VectorXd x = point;
  for (int j = 0; j < n; ++j) {
    const double saved = x[j];
    x[j] = saved + step;
    problem.Evaluate(x, &plus, nullptr);
    x[j] = saved - step;
    problem.Evaluate(x, &minus, nullptr);
    x[j] = saved;
    fd.col(j) = (plus - minus) / (2.0 * step);
  }

  std::vector<JacobianCheck> checks;
  int offset = 0;
  for (const auto& block : problem.blocks()) {
    JacobianCheck check;
    check.block = block.name;
    for (int i = 0; i < block.rows; ++i) {
      for (int j = 0; j < n; ++j) {
        const double a = dense(offset + i, j);
        const double err = std::abs(a - fd(offset + i, j)) /
                           std::max(1.0, std::abs(a));
        if (err > check.max_rel_error) {
          check.max_rel_error = err;
          check.worst_row = i;
          check.worst_col = j;
        }
      }
    }
    check.flagged = check.max_rel_error > rel_tol;
    checks.push_back(check);
    offset += block.rows;
  }
  return checks;
}

// ---------------------------------------------------------------------------
// Benchmarks.

NlpProblem MakeBoxFeasibilityProblem() {
  NlpProblem p;
  p.AddVariables(1, 5.0, -kInf, kInf);
  ConstraintBlock box;
  box.name = "box";
  box.kind = ConstraintKind::kInequality;
  box.rows = 2;
  box.eval = [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r,
                std::vector<Triplet>* jac) {
    r[0] = x[0] - 1.0;
    r[1] = 2.0 - x[0];
    if (jac) {
      jac->emplace_back(0, 0, 1.0);
      jac->emplace_back(1, 0, -1.0);
    }
  };
  p.AddBlock(std::move(box));
  return p;
}

NlpProblem MakeLinearEqualityProblem() {
  NlpProblem p;
  p.AddVariables(2, 0.0, -kInf, kInf);
  p.initial() << 3.0, -2.0;
  ConstraintBlock lin;
  lin.name = "linear";
  lin.kind = ConstraintKind::kEquality;
  lin.rows = 2;
  lin.eval = [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r,
                std::vector<Triplet>* jac) {
    r[0] = x[0] + x[1] - 1.0;
    r[1] = x[0] - x[1];
    if (jac) {
      jac->emplace_back(0, 0, 1.0);
      jac->emplace_back(0, 1, 1.0);
      jac->emplace_back(1, 0, 1.0);
      jac->emplace_back(1, 1, -1.0);
    }
  };
  p.AddBlock(std::move(lin));
  return p;
}

NlpProblem MakeCircleEqualityProblem() {
  NlpProblem p;
  p.AddVariables(2, 0.0, -kInf, kInf);
  p.initial() << 2.0, 0.0;
  ConstraintBlock circle;
  circle.name = "circle";
  circle.kind = ConstraintKind::kEquality;
  circle.rows = 1;
  circle.eval = [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> r,
                   std::vector<Triplet>* jac) {
    r[0] = x[0] * x[0] + x[1] * x[1] - 1.0;
    if (jac) {
      jac->emplace_back(0, 0, 2.0 * x[0]);
      jac->emplace_back(0, 1, 2.0 * x[1]);
    }
  };
  p.AddBlock(std::move(circle));
  return p;
}

}  // namespace timit::nlp
