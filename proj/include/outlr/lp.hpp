#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <limits>

namespace outlr {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SolverTolerances {
  double feas_tol = 1e-8;  // absolute, per constraint
  double gap_tol = 1e-8;   // relative duality gap
  int max_iterations = 200;
};

// minimize cost'x  subject to  ineq_matrix x <= ineq_rhs,  lower <= x <= upper.
// Infinite entries in lower/upper mean the side is unbounded.
struct LinearProgram {
  Vector cost;
  SparseMatrix ineq_matrix;
  Vector ineq_rhs;
  Vector lower;
  Vector upper;

  // Free variables; sets all bounds to +-inf.
  static LinearProgram make(Vector cost, SparseMatrix ineq_matrix, Vector ineq_rhs);

  Eigen::Index num_variables() const { return cost.size(); }
  Eigen::Index num_constraints() const { return ineq_rhs.size(); }

  // Throws Error(MalformedProblem) when the dimensions or bounds are inconsistent.
  void validate() const;
};

enum class LPStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LPStatus status);

struct LPSolution {
  LPStatus status = LPStatus::IterationLimit;
  Vector primal;       // empty when Infeasible
  Vector dual;         // one multiplier per inequality row, >= 0
  Vector lower_dual;   // multipliers of finite lower bounds (0 elsewhere)
  Vector upper_dual;   // multipliers of finite upper bounds (0 elsewhere)
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;

  double relative_gap() const;
};

// Mehrotra predictor-corrector interior-point method on the inequality form.
// The normal equations are assembled sparsely and factored with a simplicial
// LDL^T; the ordering is computed once per solve.
//
// Throws Error(MalformedProblem) for inconsistent inputs and
// Error(NumericalFailure) when the factorization breaks down.
LPSolution solve_lp(const LinearProgram& lp, const SolverTolerances& tol = {});

}  // namespace outlr
