#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "impactplan/contact.hpp"
#include "impactplan/planner.hpp"

namespace impactplan::planner {

namespace {

constexpr int kMaxBlockVars = 48;
constexpr int kQuantities = 8;

// Collects the global indices a block reads and hands back local positions.
struct Reads {
  std::vector<int> idx;

  int add(int global) {
    idx.push_back(global);
    return static_cast<int>(idx.size()) - 1;
  }
  int add_vec(const TranscriptionLayout& L, int knot, Quantity q) {
    const int first = static_cast<int>(idx.size());
    for (int k = 0; k < L.dim(); ++k) idx.push_back(L.index(knot, q, k));
    return first;
  }
};

// Wraps a physical-unit block body so that it reads solver-unit variables.
template <typename Fn>
nlp::Block scaled(std::string name, const Reads& reads, int rows, const TranscriptionLayout& L, Fn body) {
  if (reads.idx.size() > static_cast<std::size_t>(kMaxBlockVars))
    throw std::logic_error("transcription block too wide: " + name);
  std::vector<double> s(reads.idx.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = L.scales()[reads.idx[k]];
  auto wrapped = [s, body](auto x, auto out) {
    using T = typename decltype(out)::value_type;
    std::array<T, kMaxBlockVars> p;
    for (std::size_t k = 0; k < x.size(); ++k) p[k] = x[k] * s[k];
    body(std::span<const T>(p.data(), x.size()), out);
  };
  return nlp::make_block(std::move(name), reads.idx, rows, wrapped);
}

void fix(nlp::NlpProblem& p, int i, double value) {
  p.lower[i] = value;
  p.upper[i] = value;
}

void bound(nlp::NlpProblem& p, int i, double lo, double hi) {
  p.lower[i] = std::max(p.lower[i], lo);
  p.upper[i] = std::min(p.upper[i], hi);
}

}  // namespace

TranscriptionLayout::TranscriptionLayout(int dim, const ModeSequence& z, ForceModel model, double force_scale)
    : dim_(dim), model_(model), force_scale_(force_scale) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("spatial dimension must be 1 or 2");
  const auto problems = z.violations();
  if (!problems.empty()) throw std::invalid_argument("invalid mode sequence: " + problems.front());
  knot_modes_ = z.knot_modes();
  n_knots_ = static_cast<int>(knot_modes_.size());
  if (model == ForceModel::transmission)
    for (std::size_t j = 0; j < z.modes.size(); ++j)
      if (z.modes[j].in_contact()) stage_modes_.push_back(static_cast<int>(j));
  n_vars_ = knot_variable_count() + 2 * stage_count();

  const std::array<double, kQuantities> q_scale = {1.0, 1.0, 1.0, 1.0, 1.0, force_scale, 10.0 * force_scale,
                                                   100.0 * force_scale};
  scales_.assign(n_vars_, 1.0);
  for (int i = 0; i < n_knots_; ++i) {
    for (int q = 0; q < kQuantities; ++q)
      for (int k = 0; k < dim_; ++k) scales_[index(i, static_cast<Quantity>(q), k)] = q_scale[q];
    scales_[index(i, Quantity::dt)] = 0.1;
  }
  for (int l = 0; l < stage_count(); ++l) {
    scales_[alpha_index(l)] = 10.0;
    scales_[fd_index(l)] = force_scale;
  }
}

int TranscriptionLayout::index(int knot, Quantity q, int component) const {
  if (knot < 0 || knot >= n_knots_) throw std::out_of_range("knot index out of range");
  if (q == Quantity::dt) return knot * knot_stride() + 8 * dim_;
  if (component < 0 || component >= dim_) throw std::out_of_range("component out of range");
  return knot * knot_stride() + static_cast<int>(q) * dim_ + component;
}

int TranscriptionLayout::alpha_index(int stage) const {
  if (stage < 0 || stage >= stage_count()) throw std::out_of_range("stage index out of range");
  return knot_variable_count() + 2 * stage;
}

int TranscriptionLayout::fd_index(int stage) const { return alpha_index(stage) + 1; }

int TranscriptionLayout::stage_of_mode(int mode) const {
  for (int l = 0; l < stage_count(); ++l)
    if (stage_modes_[l] == mode) return l;
  return -1;
}

nlp::Vector TranscriptionLayout::to_physical(const nlp::Vector& x) const {
  nlp::Vector p(x.size());
  for (int i = 0; i < x.size(); ++i) p[i] = x[i] * scales_[i];
  return p;
}

nlp::Vector TranscriptionLayout::to_solver(const nlp::Vector& phys) const {
  nlp::Vector x(phys.size());
  for (int i = 0; i < phys.size(); ++i) x[i] = phys[i] / scales_[i];
  return x;
}

Transcription transcribe(const Scenario& s, const ModeSequence& z, ForceModel model) {
  const auto problems = validate_scenario(s);
  if (!problems.empty()) throw std::invalid_argument("invalid scenario: " + problems.front());

  Transcription tr;
  tr.layout = TranscriptionLayout(s.dim, z, model, s.task.f_max / 10.0);
  const TranscriptionLayout& L = tr.layout;
  auto& reg = tr.layout.constraints();
  nlp::NlpProblem& p = tr.problem;

  const int nu = s.dim;
  const int N = L.knots();
  const double inf = std::numeric_limits<double>::infinity();
  const double fs = L.force_scale();
  const double mass = s.object.mass;
  const Task& task = s.task;
  const bool aware = model == ForceModel::transmission;
  const std::vector<int>& km = L.knot_modes();
  auto mode = [&](int i) -> const Mode& { return z.modes[km[i]]; };
  auto contact = [&](int i) { return mode(i).in_contact(); };

  std::array<double, 2> n{0.0, 0.0}, t{0.0, 0.0}, g{s.object.contact_point.x(), s.object.contact_point.y()};
  for (int k = 0; k < nu; ++k) n[k] = s.object.contact_normal[k];
  if (nu == 2) t = {n[1], -n[0]};
  const double mu = task.friction_mu;

  p.n_vars = L.n_vars();
  p.lower = nlp::Vector::Constant(p.n_vars, -inf);
  p.upper = nlp::Vector::Constant(p.n_vars, inf);

  // Bounds are stated in physical units and converted at the end.
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < nu; ++k) {
      bound(p, L.index(i, Quantity::c, k), s.workspace.lower[k], s.workspace.upper[k]);
      bound(p, L.index(i, Quantity::cddot, k), -task.ee_accel_max, task.ee_accel_max);
      bound(p, L.index(i, Quantity::f, k), -task.f_max, task.f_max);
    }
    bound(p, L.index(i, Quantity::dt), task.dt_min, task.dt_max);
  }
  for (int l = 0; l < L.stage_count(); ++l) {
    bound(p, L.alpha_index(l), task.alpha_min, task.alpha_max);
    bound(p, L.fd_index(l), 0.0, task.f_max);
  }

  auto add_eq = [&](nlp::Block b, const std::string& name, int k0, int k1, const std::string& cond) {
    reg.push_back({name, "eq", k0, k1, cond, b.rows});
    p.equalities.push_back(std::move(b));
  };
  auto add_ineq = [&](nlp::Block b, const std::string& name, int k0, int k1, const std::string& cond) {
    reg.push_back({name, "ineq", k0, k1, cond, b.rows});
    p.inequalities.push_back(std::move(b));
  };
  auto pin = [&](const std::string& name, int knot, Quantity q, const Vec& target, const std::string& cond) {
    Reads r;
    r.add_vec(L, knot, q);
    std::vector<double> tgt(target.data(), target.data() + nu);
    const double rs = (q == Quantity::f) ? fs : (q == Quantity::fdot) ? 10.0 * fs : (q == Quantity::fddot) ? 100.0 * fs : 1.0;
    for (int k = 0; k < nu; ++k) fix(p, L.index(knot, q, k), tgt[k]);
    add_eq(scaled(name + "[" + std::to_string(knot) + "]", r, nu, L,
                  [tgt, rs](auto x, auto out) {
                    for (std::size_t k = 0; k < tgt.size(); ++k) out[k] = (x[k] - tgt[k]) / rs;
                  }),
           name, knot, knot, cond);
  };
  const Vec zero = Vec::Zero(nu);

  // Mode-free boundary conditions.
  pin("initial_position", 0, Quantity::y, task.y0, "any");
  pin("initial_velocity", 0, Quantity::ydot, task.ydot0, "any");
  if (task.yN) pin("terminal_position", N - 1, Quantity::y, *task.yN, "any");
  if (task.ydotN) pin("terminal_velocity", N - 1, Quantity::ydot, *task.ydotN, "any");
  if (task.ee_start) {
    pin("ee_start_position", 0, Quantity::c, *task.ee_start, "any");
    pin("ee_start_velocity", 0, Quantity::cdot, zero, "any");
  }

  // Time-dependent constraints on interval i -> i+1, governed by knot i's mode.
  for (int i = 0; i + 1 < N; ++i) {
    const std::string at = "[" + std::to_string(i) + "]";
    const bool force_term = contact(i);
    {
      Reads r;
      const int y0 = r.add_vec(L, i, Quantity::y), v0 = r.add_vec(L, i, Quantity::ydot);
      const int y1 = r.add_vec(L, i + 1, Quantity::y), v1 = r.add_vec(L, i + 1, Quantity::ydot);
      const int f0 = r.add_vec(L, i, Quantity::f), f1 = r.add_vec(L, i + 1, Quantity::f);
      const int h = r.add(L.index(i, Quantity::dt));
      add_eq(scaled("object_dynamics" + at, r, 2 * nu, L,
                    [=](auto x, auto out) {
                      for (int k = 0; k < nu; ++k) {
                        out[k] = x[y1 + k] - x[y0 + k] - 0.5 * x[h] * (x[v0 + k] + x[v1 + k]);
                        auto dv = x[v1 + k] - x[v0 + k];
                        if (force_term) dv = dv - 0.5 * x[h] * (x[f0 + k] + x[f1 + k]) / mass;
                        out[nu + k] = dv;
                      }
                    }),
             "object_dynamics", i, i + 1, force_term ? "k=1 (force term)" : "k=0");
    }
    {
      const bool skip = contact(i) != contact(i + 1);
      Reads r;
      const int c0 = r.add_vec(L, i, Quantity::c), d0 = r.add_vec(L, i, Quantity::cdot),
                a0 = r.add_vec(L, i, Quantity::cddot);
      const int c1 = r.add_vec(L, i + 1, Quantity::c), d1 = r.add_vec(L, i + 1, Quantity::cdot),
                a1 = r.add_vec(L, i + 1, Quantity::cddot);
      const int h = r.add(L.index(i, Quantity::dt));
      add_eq(scaled("ee_integration" + at, r, skip ? nu : 2 * nu, L,
                    [=](auto x, auto out) {
                      for (int k = 0; k < nu; ++k) {
                        out[k] = x[c1 + k] - x[c0 + k] - 0.5 * x[h] * (x[d0 + k] + x[d1 + k]);
                        if (!skip) out[nu + k] = x[d1 + k] - x[d0 + k] - 0.5 * x[h] * (x[a0 + k] + x[a1 + k]);
                      }
                    }),
             "ee_integration", i, i + 1, skip ? "k switches (velocity integration skipped)" : "k unchanged");
    }
    if (aware && contact(i) && contact(i + 1)) {
      const int l = L.stage_of_mode(km[i]);
      Reads r;
      const int f0 = r.add_vec(L, i, Quantity::f), g0 = r.add_vec(L, i, Quantity::fdot);
      const int f1 = r.add_vec(L, i + 1, Quantity::f), g1 = r.add_vec(L, i + 1, Quantity::fdot);
      const int a = r.add(L.alpha_index(l)), fd = r.add(L.fd_index(l));
      const int h = r.add(L.index(i, Quantity::dt));
      add_eq(scaled("force_model" + at, r, 2 * nu, L,
                    [=](auto x, auto out) {
                      using T = typename decltype(out)::value_type;
                      for (int k = 0; k < nu; ++k) {
                        T fn, gn;
                        contact::cdds_propagate<T>(x[f0 + k], x[g0 + k], x[a], x[fd] * n[k], x[h], fn, gn);
                        out[k] = (x[f1 + k] - fn) / fs;
                        out[nu + k] = (x[g1 + k] - gn) / (10.0 * fs);
                      }
                    }),
             "force_model", i, i + 1, "k=1 on both knots");
    }
  }

  // Per-knot constraints.
  for (int i = 0; i < N; ++i) {
    const std::string at = "[" + std::to_string(i) + "]";
    if (!contact(i)) {
      pin("free_force", i, Quantity::f, zero, "k=0");
      pin("free_force_rate", i, Quantity::fdot, zero, "k=0");
      pin("free_force_accel", i, Quantity::fddot, zero, "k=0");
      Reads r;
      const int y = r.add_vec(L, i, Quantity::y), c = r.add_vec(L, i, Quantity::c);
      auto surface = std::make_shared<const geometry::SurfaceSpline>(s.object.surface);
      add_ineq(scaled("separation" + at, r, 1, L,
                      [=](auto x, auto out) {
                        using T = typename decltype(out)::value_type;
                        const T px = x[c] - x[y];
                        const T py = nu == 2 ? T(x[c + 1] - x[y + 1]) : T(g[1]);
                        out[0] = surface->signed_distance(px, py) - kSeparationMargin;
                      }),
               "separation", i, i, "k=0");
      continue;
    }

    const bool after_free = i == 0 || !contact(i - 1);
    if (aware) {
      if (after_free && i > 0) {
        pin("force_initial", i, Quantity::f, zero, "first k=1 knot after k=0");
        pin("force_rate_initial", i, Quantity::fdot, zero, "first k=1 knot after k=0");
      }
      const int l = L.stage_of_mode(km[i]);
      Reads r;
      const int f = r.add_vec(L, i, Quantity::f), fd1 = r.add_vec(L, i, Quantity::fdot),
                fd2 = r.add_vec(L, i, Quantity::fddot);
      const int a = r.add(L.alpha_index(l)), fd = r.add(L.fd_index(l));
      add_eq(scaled("force_accel" + at, r, nu, L,
                    [=](auto x, auto out) {
                      for (int k = 0; k < nu; ++k)
                        out[k] = (x[fd2 + k] - contact::cdds_acceleration(x[f + k], x[fd1 + k], x[a], x[fd] * n[k])) /
                                 (100.0 * fs);
                    }),
             "force_accel", i, i, "k=1");
    } else {
      // Without a transmission model the rates carry no meaning.
      for (int k = 0; k < nu; ++k) {
        fix(p, L.index(i, Quantity::fdot, k), 0.0);
        fix(p, L.index(i, Quantity::fddot, k), 0.0);
      }
    }

    {
      Reads r;
      const int y = r.add_vec(L, i, Quantity::y), c = r.add_vec(L, i, Quantity::c);
      add_eq(scaled("contact_position" + at, r, nu, L,
                    [=](auto x, auto out) {
                      for (int k = 0; k < nu; ++k) out[k] = x[c + k] - x[y + k] - g[k];
                    }),
             "contact_position", i, i, "k=1");
    }
    {
      Reads r;
      const int f = r.add_vec(L, i, Quantity::f);
      if (nu == 1) {
        // The 1-D cone is a sign condition; the bound keeps iterates on it.
        if (n[0] > 0.0)
          bound(p, L.index(i, Quantity::f), 0.0, task.f_max);
        else
          bound(p, L.index(i, Quantity::f), -task.f_max, 0.0);
        add_ineq(scaled("friction_cone" + at, r, 1, L, [=](auto x, auto out) { out[0] = x[f] * n[0] / fs; }),
                 "friction_cone", i, i, "k=1");
      } else if (mu > 0.0) {
        // f = w+ (n + mu t) + w- (n - mu t)  =>  w+- = (f.n +- f.t / mu) / 2.
        add_ineq(scaled("friction_cone" + at, r, 2, L,
                        [=](auto x, auto out) {
                          auto fn = x[f] * n[0] + x[f + 1] * n[1];
                          auto ft = x[f] * t[0] + x[f + 1] * t[1];
                          out[0] = 0.5 * (fn + ft / mu) / fs;
                          out[1] = 0.5 * (fn - ft / mu) / fs;
                        }),
                 "friction_cone", i, i, "k=1");
      } else {
        add_ineq(scaled("friction_cone" + at, r, 1, L,
                        [=](auto x, auto out) { out[0] = (x[f] * n[0] + x[f + 1] * n[1]) / fs; }),
                 "friction_cone", i, i, "k=1");
        Reads r2;
        const int f2 = r2.add_vec(L, i, Quantity::f);
        add_eq(scaled("friction_cone_tangent" + at, r2, 1, L,
                      [=](auto x, auto out) { out[0] = (x[f2] * t[0] + x[f2 + 1] * t[1]) / fs; }),
               "friction_cone_tangent", i, i, "k=1, mu=0");
      }
    }

    const bool last_of_mode = i + 1 < N && km[i + 1] != km[i];
    if (last_of_mode && mode(i).stage == -1 && mode(i + 1).stage == 1) {
      Reads r;
      const int v = r.add_vec(L, i, Quantity::ydot);
      add_eq(scaled("stage_boundary" + at, r, 1, L,
                    [=](auto x, auto out) {
                      auto vn = x[v] * n[0];
                      if (nu == 2) vn = vn + x[v + 1] * n[1];
                      out[0] = vn;
                    }),
             "stage_boundary", i, i, "last l=-1 knot before l=+1");
    }
    if (last_of_mode && !contact(i + 1)) {
      Reads r;
      const int f = r.add_vec(L, i, Quantity::f);
      add_ineq(scaled("contact_break" + at, r, 1, L,
                      [=](auto x, auto out) {
                        auto sq = x[f] * x[f];
                        if (nu == 2) sq = sq + x[f + 1] * x[f + 1];
                        out[0] = (kContactBreakForce * kContactBreakForce - sq) / fs;
                      }),
               "contact_break", i, i, "last k=1 knot before k=0");
    }
  }

  // Objective.
  const ObjectiveWeights& w = s.weights;
  const double wf = aware ? w.force : 0.0;
  // Trapezoidal quadrature over each interval, like the dynamics.
  for (int i = 0; i + 1 < N; ++i) {
    Reads r;
    const int f0 = r.add_vec(L, i, Quantity::f), f1 = r.add_vec(L, i + 1, Quantity::f);
    const int a0 = r.add_vec(L, i, Quantity::cddot), a1 = r.add_vec(L, i + 1, Quantity::cddot);
    const int h = r.add(L.index(i, Quantity::dt));
    const double wa = w.accel, wt = w.time;
    const bool agnostic_contact = !aware && contact(i) && contact(i + 1);
    const double wdf = agnostic_contact ? kAgnosticForceVariationWeight : 0.0;
    p.objective.push_back(scaled("cost[" + std::to_string(i) + "]", r, 1, L, [=](auto x, auto out) {
      auto ff = x[f0] * x[f0] + x[f1] * x[f1];
      auto aa = x[a0] * x[a0] + x[a1] * x[a1];
      if (nu == 2) {
        ff = ff + x[f0 + 1] * x[f0 + 1] + x[f1 + 1] * x[f1 + 1];
        aa = aa + x[a0 + 1] * x[a0 + 1] + x[a1 + 1] * x[a1 + 1];
      }
      out[0] = (0.5 * wf * ff + 0.5 * wa * aa + wt) * x[h];
      if (wdf != 0.0) out[0] = out[0] + wdf * (x[f1] - x[f0]) * (x[f1] - x[f0]);
    }));
    if (agnostic_contact && i + 2 < N) {
      Reads q;
      const int h0 = q.add(L.index(i, Quantity::dt)), h1 = q.add(L.index(i + 1, Quantity::dt));
      p.objective.push_back(scaled("mesh[" + std::to_string(i) + "]", q, 1, L, [=](auto x, auto out) {
        out[0] = kAgnosticMeshVariationWeight * (x[h1] - x[h0]) * (x[h1] - x[h0]);
      }));
    }
  }
  for (int l = 0; l < L.stage_count(); ++l) {
    Reads r;
    const int a = r.add(L.alpha_index(l));
    const double sign = -static_cast<double>(z.modes[L.stage_modes()[l]].stage);
    const double ws = w.stiffness;
    p.objective.push_back(scaled("stiffness[" + std::to_string(l) + "]", r, 1, L,
                                 [=](auto x, auto out) { out[0] = ws * sign * x[a]; }));
  }

  for (int i = 0; i < p.n_vars; ++i) {
    p.lower[i] /= L.scales()[i];
    p.upper[i] /= L.scales()[i];
  }
  p.check();
  return tr;
}

ConeCheck friction_cone_check(const Vec& f, const Vec& normal, double mu) {
  if (f.size() != normal.size() || (f.size() != 1 && f.size() != 2))
    throw std::invalid_argument("friction_cone_check: dimension mismatch");
  if (!(normal.norm() > 0.0)) throw std::invalid_argument("friction_cone_check: zero normal");
  if (!(mu >= 0.0)) throw std::invalid_argument("friction_cone_check: mu must be >= 0");
  const Vec n = normal / normal.norm();
  const double tol = 1e-9 * std::max(1.0, f.norm());
  ConeCheck out;
  const double fn = f.dot(n);
  if (f.size() == 1) {
    out.weights = Vec::Constant(1, fn);
    out.inside = fn >= -tol;
    return out;
  }
  const double ft = f[0] * n[1] - f[1] * n[0];
  out.weights = Vec(2);
  if (mu > 0.0) {
    out.weights << 0.5 * (fn + ft / mu), 0.5 * (fn - ft / mu);
    out.inside = out.weights.minCoeff() >= -tol && fn >= -tol;
  } else {
    out.weights << 0.5 * fn, 0.5 * fn;
    out.inside = fn >= -tol && std::abs(ft) <= tol;
  }
  return out;
}

}  // namespace impactplan::planner
