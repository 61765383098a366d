#include <cmath>
#include <string>

#include "impactplan/contact.hpp"
#include "impactplan/planner.hpp"

namespace impactplan::planner {

namespace {

struct Checker {
  ResidualReport report;

  void eq(double r, const std::string& what, std::size_t knot) { note(std::abs(r), what, knot); }
  void geq(double r, const std::string& what, std::size_t knot) { note(std::max(0.0, -r), what, knot); }
  void within(double v, double lo, double hi, const std::string& what, std::size_t knot) {
    note(std::max({0.0, lo - v, v - hi}), what, knot);
  }
  void note(double v, const std::string& what, std::size_t knot) {
    ++report.rows;
    if (!(v <= report.max_abs)) {  // NaN counts as a violation
      report.max_abs = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
      report.worst = what + " at knot " + std::to_string(knot);
    }
  }
};

}  // namespace

ResidualReport recheck_constraints(const Scenario& s, const Trajectory& traj, ForceModel model) {
  Checker ck;
  const Task& task = s.task;
  const auto& K = traj.knots;
  const std::size_t N = K.size();
  const int nu = traj.dim;
  const double fs = task.f_max / 10.0;
  const Vec n = s.normal();
  const bool aware = model == ForceModel::transmission;
  if (N == 0) return ck.report;
  auto in_contact = [&](std::size_t i) { return traj.mode_at(static_cast<int>(i)).in_contact(); };

  for (int k = 0; k < nu; ++k) {
    ck.eq(K[0].y[k] - task.y0[k], "initial_position", 0);
    ck.eq(K[0].ydot[k] - task.ydot0[k], "initial_velocity", 0);
    if (task.yN) ck.eq(K[N - 1].y[k] - (*task.yN)[k], "terminal_position", N - 1);
    if (task.ydotN) ck.eq(K[N - 1].ydot[k] - (*task.ydotN)[k], "terminal_velocity", N - 1);
    if (task.ee_start) {
      ck.eq(K[0].c[k] - (*task.ee_start)[k], "ee_start_position", 0);
      ck.eq(K[0].cdot[k], "ee_start_velocity", 0);
    }
  }

  for (std::size_t i = 0; i < N; ++i) {
    const KnotState& a = K[i];
    ck.within(a.dt, task.dt_min, task.dt_max, "dt_bounds", i);
    for (int k = 0; k < nu; ++k) {
      ck.within(a.c[k], s.workspace.lower[k], s.workspace.upper[k], "workspace", i);
      ck.within(a.cddot[k], -task.ee_accel_max, task.ee_accel_max, "ee_accel_bounds", i);
      ck.within(a.f[k] / fs, -task.f_max / fs, task.f_max / fs, "force_bounds", i);
    }
    if (i + 1 == N) continue;

    const KnotState& b = K[i + 1];
    const double h = a.dt;
    for (int k = 0; k < nu; ++k) {
      ck.eq(b.y[k] - a.y[k] - h * (a.ydot[k] + b.ydot[k]) / 2.0, "object_position_quadrature", i);
      double impulse = 0.0;
      if (in_contact(i)) impulse = h * (a.f[k] + b.f[k]) / 2.0;
      ck.eq(b.ydot[k] - a.ydot[k] - impulse / s.object.mass, "object_velocity_quadrature", i);
      ck.eq(b.c[k] - a.c[k] - h * (a.cdot[k] + b.cdot[k]) / 2.0, "ee_position_quadrature", i);
      if (in_contact(i) == in_contact(i + 1))
        ck.eq(b.cdot[k] - a.cdot[k] - h * (a.cddot[k] + b.cddot[k]) / 2.0, "ee_velocity_quadrature", i);
    }
    if (aware && in_contact(i) && in_contact(i + 1)) {
      const StageParams* st = traj.stage_for_mode(a.mode);
      if (!st) {
        ck.note(std::numeric_limits<double>::infinity(), "missing stage parameters", i);
        continue;
      }
      for (int k = 0; k < nu; ++k) {
        const contact::ForceState next = contact::cdds_step({a.f[k], a.fdot[k]}, st->alpha, st->f_desired * n[k], h);
        ck.eq((b.f[k] - next.f) / fs, "force_model", i);
        ck.eq((b.fdot[k] - next.fdot) / (10.0 * fs), "force_model_rate", i);
      }
    }
  }

  for (std::size_t i = 0; i < N; ++i) {
    const KnotState& a = K[i];
    const Mode& m = traj.mode_at(static_cast<int>(i));
    if (!m.in_contact()) {
      for (int k = 0; k < nu; ++k) {
        ck.eq(a.f[k] / fs, "free_force", i);
        ck.eq(a.fdot[k] / (10.0 * fs), "free_force_rate", i);
        ck.eq(a.fddot[k] / (100.0 * fs), "free_force_accel", i);
      }
      Vec2 rel(a.c[0] - a.y[0], nu == 2 ? a.c[1] - a.y[1] : s.object.contact_point.y());
      ck.geq(s.object.surface.signed_distance(rel) - kSeparationMargin, "separation", i);
      continue;
    }

    const bool after_free = i > 0 && !in_contact(i - 1);
    if (aware) {
      const StageParams* st = traj.stage_for_mode(a.mode);
      if (!st) {
        ck.note(std::numeric_limits<double>::infinity(), "missing stage parameters", i);
        continue;
      }
      ck.within(st->alpha, task.alpha_min, task.alpha_max, "alpha_bounds", i);
      ck.within(st->f_desired / fs, 0.0, task.f_max / fs, "desired_force_bounds", i);
      for (int k = 0; k < nu; ++k) {
        if (after_free) {
          ck.eq(a.f[k] / fs, "force_initial", i);
          ck.eq(a.fdot[k] / (10.0 * fs), "force_rate_initial", i);
        }
        const double target = st->f_desired * n[k];
        const double fdd = st->alpha * st->alpha * (target - a.f[k]) - 2.0 * st->alpha * a.fdot[k];
        ck.eq((a.fddot[k] - fdd) / (100.0 * fs), "force_accel", i);
      }
    } else {
      for (int k = 0; k < nu; ++k) {
        ck.eq(a.fdot[k], "agnostic_force_rate", i);
        ck.eq(a.fddot[k], "agnostic_force_accel", i);
      }
    }

    const Vec g = s.contact_point_world(a.y);
    for (int k = 0; k < nu; ++k) ck.eq(a.c[k] - g[k], "contact_position", i);

    const ConeCheck cone = friction_cone_check(a.f, n, task.friction_mu);
    for (int k = 0; k < cone.weights.size(); ++k) ck.geq(cone.weights[k] / fs, "friction_cone", i);
    if (nu == 2 && task.friction_mu == 0.0)
      ck.eq((a.f[0] * n[1] - a.f[1] * n[0]) / fs, "friction_cone_tangent", i);

    const bool last_of_mode = i + 1 < N && K[i + 1].mode != a.mode;
    if (last_of_mode && m.stage == -1 && traj.mode_at(static_cast<int>(i + 1)).stage == 1)
      ck.eq(a.ydot.dot(n), "stage_boundary", i);
    if (last_of_mode && !in_contact(i + 1))
      ck.geq((kContactBreakForce * kContactBreakForce - a.f.squaredNorm()) / fs, "contact_break", i);
  }
  return ck.report;
}

}  // namespace impactplan::planner
