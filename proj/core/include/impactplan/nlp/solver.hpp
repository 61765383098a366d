#pragma once

#include <string>

#include "impactplan/nlp/problem.hpp"

namespace impactplan::nlp {

/// Curvature model of the inner minimizer. `structured` combines the exact
/// Gauss-Newton term of the penalty (rho J'J from the block Jacobians) with
/// one SR1 secant matrix per block row, on that row's own variables, for the
/// remaining curvature; `lbfgs` is the plain limited-memory secant model.
enum class InnerMethod { structured, lbfgs };

struct SolverOptions {
  double feas_tol = 1e-6;
  double opt_tol = 1e-6;
  int max_outer = 50;
  int max_inner = 500;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double max_penalty = 1e10;
  int lbfgs_memory = 12;
  InnerMethod inner_method = InnerMethod::structured;
};

enum class SolveStatus { converged, max_iter, infeasible };

std::string to_string(SolveStatus s);

struct Solution {
  Vector x_star;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  /// max(|h(x)|, max(0, -g(x))) over all rows.
  double max_violation = 0.0;
  /// Projected-gradient norm of the Lagrangian, divided by
  /// max(1, |grad f|_inf, |J' lambda|_inf) (constraint term over all rows).
  double stationarity = 0.0;
  int iterations = 0;  // inner (quasi-Newton) iterations summed over all outer loops
  int outer_iterations = 0;
  double wall_time = 0.0;  // s
  Vector eq_multipliers;
  Vector ineq_multipliers;

  bool converged() const { return status == SolveStatus::converged; }
};

/// Augmented-Lagrangian outer loop (PHR form for inequalities) with a projected
/// quasi-Newton inner minimizer over the variable box. x0 is clamped
/// into the box. Deterministic for identical inputs.
Solution solve(const NlpProblem& problem, Vector x0, const SolverOptions& opts = {});

/// Maximum constraint violation at x, including bound violations.
double max_violation(const NlpProblem& problem, const Vector& x);

/// KKT stationarity residual at (x, lambda, mu), computed from dense Jacobians
/// independently of the solver's bookkeeping. Same normalization as
/// Solution::stationarity.
double kkt_stationarity(const NlpProblem& problem, const Vector& x, const Vector& lambda,
                        const Vector& mu);

}  // namespace impactplan::nlp
