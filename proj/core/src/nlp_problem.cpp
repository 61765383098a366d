#include "impactplan/nlp/problem.hpp"

#include <algorithm>
#include <string>

namespace impactplan::nlp {

namespace {

int rows_of(const std::vector<Block>& blocks) {
  int r = 0;
  for (const auto& b : blocks) r += b.rows;
  return r;
}

void check_blocks(const std::vector<Block>& blocks, int n, const char* kind) {
  for (const auto& b : blocks) {
    if (b.rows < 0 || !b.eval || !b.eval_dual)
      throw std::invalid_argument(std::string(kind) + " block '" + b.name + "' is incomplete");
    for (int v : b.vars)
      if (v < 0 || v >= n)
        throw std::invalid_argument(std::string(kind) + " block '" + b.name +
                                    "' references variable " + std::to_string(v));
  }
}

Vector stacked_values(const std::vector<Block>& blocks, const Vector& x) {
  Vector out(rows_of(blocks));
  int r = 0;
  for (const auto& b : blocks) {
    evaluate_block(b, x, std::span<double>(out.data() + r, b.rows));
    r += b.rows;
  }
  return out;
}

Matrix stacked_jacobian(const std::vector<Block>& blocks, const Vector& x, int n) {
  Matrix jac = Matrix::Zero(rows_of(blocks), n);
  std::vector<double> vals;
  Matrix local;
  int r = 0;
  for (const auto& b : blocks) {
    vals.resize(b.rows);
    jacobian_block(b, x, vals, local);
    for (int c = 0; c < static_cast<int>(b.vars.size()); ++c)
      jac.block(r, b.vars[c], b.rows, 1) += local.col(c);
    r += b.rows;
  }
  return jac;
}

}  // namespace

int NlpProblem::equality_rows() const { return rows_of(equalities); }
int NlpProblem::inequality_rows() const { return rows_of(inequalities); }

void NlpProblem::check() const {
  if (n_vars < 0) throw std::invalid_argument("negative variable count");
  if (lower.size() != n_vars || upper.size() != n_vars)
    throw std::invalid_argument("bound vectors do not match the variable count");
  for (int i = 0; i < n_vars; ++i)
    if (lower[i] > upper[i])
      throw std::invalid_argument("lower bound exceeds upper bound at variable " +
                                  std::to_string(i));
  check_blocks(objective, n_vars, "objective");
  check_blocks(equalities, n_vars, "equality");
  check_blocks(inequalities, n_vars, "inequality");
}

void evaluate_block(const Block& block, const Vector& x, std::span<double> out) {
  thread_local std::vector<double> local;
  local.resize(block.vars.size());
  for (std::size_t k = 0; k < block.vars.size(); ++k) local[k] = x[block.vars[k]];
  block.eval(local, out);
}

void jacobian_block(const Block& block, const Vector& x, std::span<double> out,
                    Matrix& local_jacobian) {
  const int m = static_cast<int>(block.vars.size());
  local_jacobian.setZero(block.rows, m);
  thread_local std::vector<Dual> in;
  thread_local std::vector<Dual> res;
  in.resize(m);
  res.resize(block.rows);
  if (m == 0) {
    evaluate_block(block, x, out);
    return;
  }
  for (int start = 0; start < m; start += kDualWidth) {
    const int width = std::min(kDualWidth, m - start);
    for (int k = 0; k < m; ++k) in[k] = Dual(x[block.vars[k]]);
    for (int k = 0; k < width; ++k)
      in[start + k] = Dual::variable(x[block.vars[start + k]], k, width);
    for (auto& r : res) r = Dual();
    block.eval_dual(in, res);
    for (int r = 0; r < block.rows; ++r) {
      if (start == 0) out[r] = res[r].v;
      for (int k = 0; k < width && k < res[r].n; ++k) local_jacobian(r, start + k) = res[r].d[k];
    }
  }
}

double objective_value(const NlpProblem& p, const Vector& x) {
  double f = 0.0;
  std::vector<double> vals;
  for (const auto& b : p.objective) {
    vals.assign(b.rows, 0.0);
    evaluate_block(b, x, vals);
    for (double v : vals) f += v;
  }
  return f;
}

Vector objective_gradient(const NlpProblem& p, const Vector& x) {
  Vector g = Vector::Zero(p.n_vars);
  std::vector<double> vals;
  Matrix local;
  for (const auto& b : p.objective) {
    vals.resize(b.rows);
    jacobian_block(b, x, vals, local);
    for (int c = 0; c < static_cast<int>(b.vars.size()); ++c) g[b.vars[c]] += local.col(c).sum();
  }
  return g;
}

Vector equality_values(const NlpProblem& p, const Vector& x) {
  return stacked_values(p.equalities, x);
}
Vector inequality_values(const NlpProblem& p, const Vector& x) {
  return stacked_values(p.inequalities, x);
}
Matrix equality_jacobian(const NlpProblem& p, const Vector& x) {
  return stacked_jacobian(p.equalities, x, p.n_vars);
}
Matrix inequality_jacobian(const NlpProblem& p, const Vector& x) {
  return stacked_jacobian(p.inequalities, x, p.n_vars);
}

}  // namespace impactplan::nlp
