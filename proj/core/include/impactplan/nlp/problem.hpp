#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "impactplan/nlp/dual.hpp"

namespace impactplan::nlp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A differentiable vector function of a small subset of the decision vector.
///
/// `vars` lists the global indices the block reads; the evaluators receive
/// those entries in the same order. Both evaluators must implement the same
/// expression: the double one is used for plain evaluation, the Dual one for
/// derivatives.
struct Block {
  std::string name;
  std::vector<int> vars;
  int rows = 1;
  std::function<void(std::span<const double>, std::span<double>)> eval;
  std::function<void(std::span<const Dual>, std::span<Dual>)> eval_dual;
};

/// Wraps a functor with a templated `operator()(std::span<const T>, std::span<T>)`.
template <typename Fn>
Block make_block(std::string name, std::vector<int> vars, int rows, Fn fn) {
  Block b;
  b.name = std::move(name);
  b.vars = std::move(vars);
  b.rows = rows;
  b.eval = [fn](std::span<const double> x, std::span<double> out) { fn(x, out); };
  b.eval_dual = [fn](std::span<const Dual> x, std::span<Dual> out) { fn(x, out); };
  return b;
}

/// minimize  sum(objective blocks)
/// s.t.      equality blocks   = 0
///           inequality blocks >= 0
///           lower <= x <= upper
struct NlpProblem {
  int n_vars = 0;
  Vector lower;
  Vector upper;
  std::vector<Block> objective;
  std::vector<Block> equalities;
  std::vector<Block> inequalities;

  int equality_rows() const;
  int inequality_rows() const;
  /// Throws std::invalid_argument on inconsistent dimensions or indices.
  void check() const;
};

/// Values of one block at the global point x.
void evaluate_block(const Block& block, const Vector& x, std::span<double> out);

/// Values and the dense local Jacobian (rows x vars.size()) of one block.
/// Uses chunked forward-mode propagation for blocks wider than kDualWidth.
void jacobian_block(const Block& block, const Vector& x, std::span<double> out,
                    Matrix& local_jacobian);

double objective_value(const NlpProblem& p, const Vector& x);
Vector objective_gradient(const NlpProblem& p, const Vector& x);
Vector equality_values(const NlpProblem& p, const Vector& x);
Vector inequality_values(const NlpProblem& p, const Vector& x);
/// Dense Jacobians, mainly for verification; the solver works block-wise.
Matrix equality_jacobian(const NlpProblem& p, const Vector& x);
Matrix inequality_jacobian(const NlpProblem& p, const Vector& x);

/// Gradient of a scalar function written against a generic scalar type.
/// `fn` must be callable as fn(std::span<const Dual>) -> Dual. Inputs are seeded
/// kDualWidth at a time, so any dimension is supported.
template <typename Fn>
Vector gradient(Fn&& fn, const Vector& x) {
  const int n = static_cast<int>(x.size());
  Vector g = Vector::Zero(n);
  std::vector<Dual> xs(n);
  for (int start = 0; start < n; start += kDualWidth) {
    const int width = std::min(kDualWidth, n - start);
    for (int i = 0; i < n; ++i) xs[i] = Dual(x[i]);
    for (int k = 0; k < width; ++k) xs[start + k] = Dual::variable(x[start + k], k, width);
    const Dual y = fn(std::span<const Dual>(xs));
    if (!std::isfinite(y.v)) throw std::domain_error("gradient: non-finite function value");
    for (int k = 0; k < width; ++k) {
      const double dk = k < y.n ? y.d[k] : 0.0;
      if (!std::isfinite(dk)) throw std::domain_error("gradient: non-finite derivative");
      g[start + k] = dk;
    }
  }
  return g;
}

}  // namespace impactplan::nlp
