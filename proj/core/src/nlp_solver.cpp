#include "impactplan/nlp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <Eigen/Cholesky>
#include <limits>

namespace impactplan::nlp {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

Vector project(const NlpProblem& p, const Vector& x) {
  return x.cwiseMax(p.lower).cwiseMin(p.upper);
}

double projected_gradient_norm(const NlpProblem& p, const Vector& x, const Vector& g) {
  return (project(p, x - g) - x).lpNorm<Eigen::Infinity>();
}

// One symmetric rank-one secant matrix per row of every block, acting on the
// block's own variables (partitioned quasi-Newton). Rows that are linear keep
// a zero matrix; bilinear rows are learned after a few steps.
class ElementSecants {
 public:
  explicit ElementSecants(const NlpProblem& p) {
    for (const auto* list : {&p.objective, &p.equalities, &p.inequalities})
      for (const Block& b : *list) {
        Element e;
        const int k = static_cast<int>(b.vars.size());
        e.H.assign(b.rows, Matrix::Zero(k, k));
        blocks_.push_back(std::move(e));
      }
  }

  /// Updates the matrices of block `id` from its local Jacobian at x and
  /// returns them.
  const std::vector<Matrix>& update(int id, const Block& b, const Vector& x, const Matrix& J) {
    Element& e = blocks_[id];
    const int k = static_cast<int>(b.vars.size());
    Vector xl(k);
    for (int c = 0; c < k; ++c) xl[c] = x[b.vars[c]];
    if (e.seen) {
      const Vector s = xl - e.x;
      const double sn = s.norm();
      if (sn > 0.0) {
        for (int r = 0; r < b.rows; ++r) {
          const Vector y = (J.row(r) - e.J.row(r)).transpose();
          const Vector res = y - e.H[r] * s;
          const double sr = s.dot(res);
          if (std::isfinite(sr) && std::abs(sr) > 1e-8 * sn * res.norm()) e.H[r] += res * res.transpose() / sr;
        }
      }
    }
    e.x = std::move(xl);
    e.J = J;
    e.seen = true;
    return e.H;
  }

 private:
  struct Element {
    bool seen = false;
    Vector x;
    Matrix J;
    std::vector<Matrix> H;
  };
  std::vector<Element> blocks_;
};

// Augmented Lagrangian
//   L(x) = f(x) - lambda'h + rho/2 |h|^2 + 1/(2 rho) sum(max(0, mu - rho g)^2 - mu^2)
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const NlpProblem& p, const Vector& lambda, const Vector& mu, double rho)
      : p_(p), lambda_(lambda), mu_(mu), rho_(rho) {}

  double value(const Vector& x) const {
    double f = objective_value(p_, x);
    const Vector h = equality_values(p_, x);
    const Vector g = inequality_values(p_, x);
    f += -lambda_.dot(h) + 0.5 * rho_ * h.squaredNorm();
    for (int i = 0; i < g.size(); ++i) {
      const double t = std::max(0.0, mu_[i] - rho_ * g[i]);
      f += (t * t - mu_[i] * mu_[i]) / (2.0 * rho_);
    }
    return f;
  }

  /// When `model` is given it receives the curvature model: rho J'J over the
  /// equality rows and the active inequality rows, plus the element secants
  /// weighted by their first-order multipliers. `secants` is updated at x.
  double value_and_gradient(const Vector& x, Vector& grad, Matrix* model = nullptr,
                            ElementSecants* secants = nullptr) const {
    grad = Vector::Zero(p_.n_vars);
    if (model) model->setZero(p_.n_vars, p_.n_vars);
    const std::vector<Matrix>* H = nullptr;
    auto add_model = [&](const Block& b, int r, double weight, bool gauss_newton) {
      const int m = static_cast<int>(b.vars.size());
      for (int c1 = 0; c1 < m; ++c1) {
        const double a = gauss_newton ? rho_ * local(r, c1) : 0.0;
        for (int c2 = 0; c2 < m; ++c2) {
          double v = a * local(r, c2);
          if (H && weight != 0.0) v += weight * (*H)[r](c1, c2);
          (*model)(b.vars[c1], b.vars[c2]) += v;
        }
      }
    };
    int id = 0;
    double f = 0.0;
    for (const auto& b : p_.objective) {
      vals.resize(b.rows);
      jacobian_block(b, x, vals, local);
      H = secants ? &secants->update(id, b, x, local) : nullptr;
      ++id;
      for (int r = 0; r < b.rows; ++r) {
        f += vals[r];
        if (model && H) add_model(b, r, 1.0, false);
      }
      for (int c = 0; c < static_cast<int>(b.vars.size()); ++c) grad[b.vars[c]] += local.col(c).sum();
    }
    int row = 0;
    for (const auto& b : p_.equalities) {
      vals.resize(b.rows);
      jacobian_block(b, x, vals, local);
      H = secants ? &secants->update(id, b, x, local) : nullptr;
      ++id;
      for (int r = 0; r < b.rows; ++r, ++row) {
        const double h = vals[r];
        f += -lambda_[row] * h + 0.5 * rho_ * h * h;
        const double w = -lambda_[row] + rho_ * h;
        if (model) add_model(b, r, w, true);
        if (w == 0.0) continue;
        for (int c = 0; c < static_cast<int>(b.vars.size()); ++c) grad[b.vars[c]] += w * local(r, c);
      }
    }
    row = 0;
    for (const auto& b : p_.inequalities) {
      vals.resize(b.rows);
      jacobian_block(b, x, vals, local);
      H = secants ? &secants->update(id, b, x, local) : nullptr;
      ++id;
      for (int r = 0; r < b.rows; ++r, ++row) {
        const double t = std::max(0.0, mu_[row] - rho_ * vals[r]);
        f += (t * t - mu_[row] * mu_[row]) / (2.0 * rho_);
        if (t == 0.0) continue;
        if (model) add_model(b, r, -t, true);
        for (int c = 0; c < static_cast<int>(b.vars.size()); ++c) grad[b.vars[c]] -= t * local(r, c);
      }
    }
    return f;
  }

 private:
  mutable std::vector<double> vals;
  mutable Matrix local;
  const NlpProblem& p_;
  const Vector& lambda_;
  const Vector& mu_;
  double rho_;
};

struct InnerResult {
  int iterations = 0;
  double pg_norm = 0.0;
};

// Projected L-BFGS on the box. Variables sitting on a bound with the gradient
// pointing outward are frozen for the direction computation; the step is
// projected back onto the box and accepted by an Armijo test along the
// projection arc.
InnerResult minimize_box(const NlpProblem& p, const AugmentedLagrangian& al, Vector& x, double tol,
                         int max_iter, int memory) {
  InnerResult out;
  const int n = p.n_vars;
  Vector g;
  double f = al.value_and_gradient(x, g);
  std::deque<Vector> S, Y;
  std::deque<double> rhos;

  for (int it = 0; it < max_iter; ++it) {
    out.pg_norm = projected_gradient_norm(p, x, g);
    if (out.pg_norm <= tol) return out;

    Vector free = Vector::Ones(n);
    for (int i = 0; i < n; ++i) {
      const bool at_lower = x[i] <= p.lower[i] && g[i] > 0.0;
      const bool at_upper = x[i] >= p.upper[i] && g[i] < 0.0;
      if (at_lower || at_upper || p.lower[i] == p.upper[i]) free[i] = 0.0;
    }

    Vector q = g.cwiseProduct(free);
    const int m = static_cast<int>(S.size());
    std::vector<double> a(m);
    for (int k = m - 1; k >= 0; --k) {
      a[k] = rhos[k] * S[k].cwiseProduct(free).dot(q);
      q -= a[k] * Y[k].cwiseProduct(free);
    }
    double gamma = 1.0;
    if (m > 0) gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
    q *= gamma;
    for (int k = 0; k < m; ++k) {
      const double b = rhos[k] * Y[k].cwiseProduct(free).dot(q);
      q += (a[k] - b) * S[k].cwiseProduct(free);
    }
    Vector d = -q.cwiseProduct(free);
    if (g.dot(d) >= 0.0 || !d.allFinite()) {
      S.clear();
      Y.clear();
      rhos.clear();
      d = -g.cwiseProduct(free);
    }

    double t = 1.0;
    if (S.empty()) t = std::min(1.0, 1.0 / std::max(1e-12, d.lpNorm<Eigen::Infinity>()));
    bool accepted = false;
    Vector xt, gt;
    double ft = f;
    for (int ls = 0; ls < 50; ++ls) {
      xt = project(p, x + t * d);
      const double decrease = g.dot(xt - x);
      if (decrease < 0.0) {
        ft = al.value(xt);
        if (std::isfinite(ft) && ft <= f + 1e-4 * decrease) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    ++out.iterations;
    if (!accepted) {
      if (!S.empty()) {
        S.clear();
        Y.clear();
        rhos.clear();
        continue;
      }
      return out;
    }
    ft = al.value_and_gradient(xt, gt);
    Vector s = xt - x;
    Vector y = gt - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rhos.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > memory) {
        S.pop_front();
        Y.pop_front();
        rhos.pop_front();
      }
    }
    x = std::move(xt);
    g = std::move(gt);
    f = ft;
  }
  out.pg_norm = projected_gradient_norm(p, x, g);
  return out;
}

// Projected quasi-Newton on the partitioned model (see ElementSecants).
// Variables within eps of a bound with the gradient pointing outward are held
// and take a diagonally scaled gradient step; the rest take a Newton step on
// the model (shifted when it is not positive definite there). The step is
// projected onto the box and accepted by an Armijo test along the projection
// arc.
InnerResult minimize_box_structured(const NlpProblem& p, const AugmentedLagrangian& al, Vector& x, double tol,
                                    int max_iter, ElementSecants& secants) {
  InnerResult out;
  const int n = p.n_vars;
  Vector g, gt;
  Matrix model, model_t;
  double f = al.value_and_gradient(x, g, &model, &secants);
  std::vector<int> free;
  free.reserve(n);
  bool gradient_step = false;

  for (int it = 0; it < max_iter; ++it) {
    out.pg_norm = projected_gradient_norm(p, x, g);
    if (out.pg_norm <= tol) return out;

    const double eps = std::min(1e-4, out.pg_norm);
    std::vector<char> held(n, 0);
    for (int i = 0; i < n; ++i) {
      const bool near_lower = x[i] <= p.lower[i] + eps && g[i] > 0.0;
      const bool near_upper = x[i] >= p.upper[i] - eps && g[i] < 0.0;
      held[i] = near_lower || near_upper || p.lower[i] == p.upper[i];
    }
    Vector d = Vector::Zero(n);
    if (!gradient_step) {
      free.clear();
      for (int i = 0; i < n; ++i)
        if (!held[i]) free.push_back(i);
      const int m = static_cast<int>(free.size());
      Matrix H(m, m);
      Vector rhs(m);
      for (int a = 0; a < m; ++a) {
        rhs[a] = -g[free[a]];
        for (int b = 0; b < m; ++b) H(a, b) = model(free[a], free[b]);
      }
      const double diag = m ? std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()) : 1.0;
      Vector dF;
      double shift = 0.0;
      for (int attempt = 0; attempt < 16; ++attempt) {
        Eigen::LLT<Matrix> llt(H);
        if (llt.info() == Eigen::Success) {
          dF = llt.solve(rhs);
          if (dF.allFinite()) break;
        }
        const double next = shift == 0.0 ? 1e-10 * diag : 10.0 * shift;
        H.diagonal().array() += next - shift;
        shift = next;
        dF.resize(0);
      }
      if (dF.size() == m)
        for (int a = 0; a < m; ++a) d[free[a]] = dF[a];
    }
    for (int i = 0; i < n; ++i)
      if (held[i] && p.lower[i] < p.upper[i] && x[i] > p.lower[i] && x[i] < p.upper[i])
        d[i] = -g[i] / std::max(1e-12, std::abs(model(i, i)));
    if (gradient_step || !(g.dot(d) < 0.0)) {
      for (int i = 0; i < n; ++i) d[i] = p.lower[i] == p.upper[i] ? 0.0 : -g[i] / std::max(1.0, std::abs(model(i, i)));
    }

    double t = 1.0;
    bool accepted = false;
    Vector xt;
    double ft = f;
    for (int ls = 0; ls < 60; ++ls) {
      xt = project(p, x + t * d);
      const double decrease = g.dot(xt - x);
      if (decrease < 0.0) {
        ft = al.value(xt);
        if (std::isfinite(ft) && ft <= f + 1e-4 * decrease) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    ++out.iterations;
    if (!accepted) {
      if (gradient_step) return out;
      gradient_step = true;
      continue;
    }
    gradient_step = false;

    ft = al.value_and_gradient(xt, gt, &model_t, &secants);
    x = xt;
    g = std::move(gt);
    model.swap(model_t);
    f = ft;
  }
  out.pg_norm = projected_gradient_norm(p, x, g);
  return out;
}

double violation_of(const Vector& h, const Vector& g) {
  double v = h.size() ? h.lpNorm<Eigen::Infinity>() : 0.0;
  for (int i = 0; i < g.size(); ++i) v = std::max(v, -g[i]);
  return v;
}

}  // namespace

double max_violation(const NlpProblem& problem, const Vector& x) {
  double v = violation_of(equality_values(problem, x), inequality_values(problem, x));
  for (int i = 0; i < problem.n_vars; ++i) {
    v = std::max(v, problem.lower[i] - x[i]);
    v = std::max(v, x[i] - problem.upper[i]);
  }
  return v;
}

double kkt_stationarity(const NlpProblem& problem, const Vector& x, const Vector& lambda,
                        const Vector& mu) {
  const Vector gf = objective_gradient(problem, x);
  Vector gl = gf;
  if (lambda.size()) gl -= equality_jacobian(problem, x).transpose() * lambda;
  if (mu.size()) gl -= inequality_jacobian(problem, x).transpose() * mu;
  const double scale = std::max({1.0, gf.lpNorm<Eigen::Infinity>(), (gl - gf).lpNorm<Eigen::Infinity>()});
  return projected_gradient_norm(problem, x, gl) / scale;
}

namespace {

// g(x) >= 0 becomes g(x) - s = 0 with a slack s >= 0 appended to the variables.
NlpProblem with_slacks(const NlpProblem& p) {
  NlpProblem q;
  const int m = p.inequality_rows();
  q.n_vars = p.n_vars + m;
  q.lower.resize(q.n_vars);
  q.upper.resize(q.n_vars);
  q.lower << p.lower, Vector::Zero(m);
  q.upper << p.upper, Vector::Constant(m, std::numeric_limits<double>::infinity());
  q.objective = p.objective;
  q.equalities = p.equalities;
  int next = p.n_vars;
  for (const Block& b : p.inequalities) {
    Block e;
    e.name = b.name;
    e.rows = b.rows;
    e.vars = b.vars;
    for (int r = 0; r < b.rows; ++r) e.vars.push_back(next++);
    const int k = static_cast<int>(b.vars.size());
    auto wrap = [k, rows = b.rows](const auto& inner) {
      return [inner, k, rows](auto x, auto out) {
        inner(x.first(k), out);
        for (int r = 0; r < rows; ++r) out[r] = out[r] - x[k + r];
      };
    };
    e.eval = wrap(b.eval);
    e.eval_dual = wrap(b.eval_dual);
    q.equalities.push_back(std::move(e));
  }
  return q;
}

Solution solve_equality_form(const NlpProblem& problem, Vector x0, const SolverOptions& opts);

}  // namespace

Solution solve(const NlpProblem& problem, Vector x0, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.check();
  if (x0.size() != problem.n_vars) throw std::invalid_argument("solve: x0 has the wrong size");
  const int m_eq = problem.equality_rows();
  const int m_in = problem.inequality_rows();
  if (m_in == 0) return solve_equality_form(problem, std::move(x0), opts);

  const NlpProblem q = with_slacks(problem);
  Vector z(q.n_vars);
  const Vector x = project(problem, x0);
  z << x, inequality_values(problem, x).cwiseMax(0.0);
  Solution inner = solve_equality_form(q, std::move(z), opts);

  Solution sol = inner;
  sol.x_star = inner.x_star.head(problem.n_vars);
  sol.eq_multipliers = inner.eq_multipliers.head(m_eq);
  sol.ineq_multipliers = inner.eq_multipliers.tail(m_in).cwiseMax(0.0);
  sol.objective_value = objective_value(problem, sol.x_star);
  sol.max_violation = max_violation(problem, sol.x_star);
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

namespace {

Solution solve_equality_form(const NlpProblem& problem, Vector x0, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();

  Solution sol;
  Vector x = project(problem, x0);
  Vector lambda = Vector::Zero(problem.equality_rows());
  Vector mu = Vector::Zero(problem.inequality_rows());
  double rho = opts.initial_penalty;
  {
    // Balance the objective against the initial infeasibility.
    const Vector h0 = equality_values(problem, x);
    const Vector g0 = inequality_values(problem, x);
    const double c2 = 0.5 * (h0.squaredNorm() + g0.cwiseMin(0.0).squaredNorm());
    const double scaled = 10.0 * std::max(1.0, std::abs(objective_value(problem, x))) / std::max(1.0, c2);
    rho = std::clamp(std::max(rho, scaled), rho, std::max(rho, opts.max_penalty * 1e-2));
  }
  double inner_eps = 0.1;
  double prev_measure = std::numeric_limits<double>::infinity();
  double best_violation = std::numeric_limits<double>::infinity();
  int stalled = 0;
  constexpr double kMultiplierCap = 1e20;
  constexpr double kRequiredDecrease = 0.5;
  ElementSecants secants(problem);

  sol.status = SolveStatus::max_iter;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    sol.outer_iterations = outer + 1;
    const AugmentedLagrangian al(problem, lambda, mu, rho);
    const double fscale = std::max(1.0, objective_gradient(problem, x).lpNorm<Eigen::Infinity>());
    const double inner_tol = std::max(inner_eps, 0.1 * opts.opt_tol) * fscale;
    const InnerResult ir =
        opts.inner_method == InnerMethod::structured
            ? minimize_box_structured(problem, al, x, inner_tol, opts.max_inner, secants)
            : minimize_box(problem, al, x, inner_tol, opts.max_inner, opts.lbfgs_memory);
    sol.iterations += ir.iterations;
    const Vector h = equality_values(problem, x);
    const Vector g = inequality_values(problem, x);
    const double viol = violation_of(h, g);

    // Feasibility and complementarity of the current point, used to decide
    // whether the penalty has to grow.
    double measure = h.size() ? h.lpNorm<Eigen::Infinity>() : 0.0;
    for (int i = 0; i < g.size(); ++i) measure = std::max(measure, std::abs(std::min(g[i], mu[i] / rho)));

    Vector grad_al;
    al.value_and_gradient(x, grad_al);
    const Vector gf = objective_gradient(problem, x);
    const double gl_scale = std::max({1.0, gf.lpNorm<Eigen::Infinity>(), (grad_al - gf).lpNorm<Eigen::Infinity>()});
    const double stat = projected_gradient_norm(problem, x, grad_al) / gl_scale;
    sol.max_violation = viol;
    sol.stationarity = stat;
    lambda = (lambda - rho * h).cwiseMax(-kMultiplierCap).cwiseMin(kMultiplierCap);
    mu = (mu - rho * g).cwiseMax(0.0).cwiseMin(kMultiplierCap);
    if (viol <= opts.feas_tol && stat <= opts.opt_tol) {
      sol.status = SolveStatus::converged;
      break;
    }

    if (measure > kRequiredDecrease * prev_measure && measure > opts.feas_tol) {
      if (rho >= opts.max_penalty) {
        if (viol > opts.feas_tol && viol >= 0.99 * best_violation && ++stalled >= 3) {
          sol.status = SolveStatus::infeasible;
          break;
        }
      } else if (ir.pg_norm <= inner_tol) {
        rho = std::min(rho * opts.penalty_growth, opts.max_penalty);
      }
    }
    prev_measure = measure;
    best_violation = std::min(best_violation, viol);
    inner_eps = std::max(0.1 * inner_eps, 0.1 * opts.opt_tol);
  }

  sol.x_star = x;
  sol.objective_value = objective_value(problem, x);
  sol.max_violation = max_violation(problem, x);
  sol.eq_multipliers = lambda;
  sol.ineq_multipliers = mu;
  sol.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace

}  // namespace impactplan::nlp
