#pragma once

// Test-only oracles shared by the unit and acceptance binaries.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "impactplan/nlp/problem.hpp"

namespace checks {

struct GradientReport {
  double worst = 0.0;  // largest |ad - fd| / max(1, |fd|)
  std::string block;
  long comparisons = 0;
};

// Central differences with h = 1e-6 (1 + |x|) against the dual-number Jacobian
// of every objective, equality and inequality block, at `evaluations` random
// points around `center` (perturbed by `spread` (1 + |x|), kept in the box).
inline GradientReport check_gradients(const impactplan::nlp::NlpProblem& p, const impactplan::nlp::Vector& center,
                                      int evaluations, unsigned seed, double spread = 0.05) {
  using namespace impactplan::nlp;
  GradientReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<const Block*> blocks;
  for (const auto* group : {&p.objective, &p.equalities, &p.inequalities})
    for (const auto& b : *group) blocks.push_back(&b);
  for (int e = 0; e < evaluations; ++e) {
    Vector x = center;
    for (int i = 0; i < x.size(); ++i) {
      const double h = 1e-6 * (1.0 + std::abs(x[i]));
      x[i] = std::clamp(x[i] + spread * (1.0 + std::abs(x[i])) * u(rng), p.lower[i] + 2 * h, p.upper[i] - 2 * h);
    }
    for (const Block* b : blocks) {
      std::vector<double> out(b->rows), up(b->rows), dn(b->rows);
      Matrix J;
      jacobian_block(*b, x, out, J);
      for (std::size_t k = 0; k < b->vars.size(); ++k) {
        const int v = b->vars[k];
        const double h = 1e-6 * (1.0 + std::abs(x[v]));
        Vector xp = x, xm = x;
        xp[v] += h;
        xm[v] -= h;
        evaluate_block(*b, xp, up);
        evaluate_block(*b, xm, dn);
        for (int r = 0; r < b->rows; ++r) {
          const double fd = (up[r] - dn[r]) / (2 * h);
          const double err = std::abs(J(r, static_cast<Eigen::Index>(k)) - fd) / std::max(1.0, std::abs(fd));
          ++rep.comparisons;
          if (err > rep.worst) {
            rep.worst = err;
            rep.block = b->name;
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace checks
