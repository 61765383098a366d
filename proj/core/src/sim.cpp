#include "impactplan/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>


namespace impactplan::sim {

double SimTrace::peak_force() const {
  double p = 0.0;
  for (const auto& s : samples) p = std::max(p, s.force);
  return p;
}

int SimTrace::first_touch() const {
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].gap <= 0.0) return static_cast<int>(i);
  return -1;
}

std::string to_string(ContactOutcome o) {
  switch (o) {
    case ContactOutcome::maintained: return "maintained";
    case ContactOutcome::rebound: return "rebound";
    case ContactOutcome::missed: return "missed";
  }
  return "unknown";
}

namespace {

struct Reference {
  Vec c, cdot, cddot;
};

// Velocity linear between knots, position its integral (consistent with the
// trapezoidal transcription), held after the last knot.
Reference reference_at(const Trajectory& traj, double t) {
  const auto& K = traj.knots;
  Reference r;
  if (t >= K.back().t) {
    r.c = K.back().c;
    r.cdot = Vec::Zero(traj.dim);
    r.cddot = Vec::Zero(traj.dim);
    return r;
  }
  std::size_t i = 0;
  while (i + 2 < K.size() && K[i + 1].t <= t) ++i;
  const KnotState& a = K[i];
  const KnotState& b = K[i + 1];
  const double h = b.t - a.t;
  const double tau = std::clamp(t - a.t, 0.0, h);
  r.cddot = h > 0.0 ? Vec((b.cdot - a.cdot) / h) : Vec::Zero(traj.dim);
  r.cdot = a.cdot + tau * r.cddot;
  r.c = a.c + tau * a.cdot + 0.5 * tau * tau * r.cddot;
  return r;
}

struct Body {
  Vec y, ydot, c, cdot;
  bool attached = false;
};

// One sample at time t followed by a semi-implicit Euler step of length dt.
template <typename RefFn, typename GainFn>
SimTrace run(const Scenario& s, Body b, double duration, double dt, RefFn ref_at, GainFn gains_at) {
  SimTrace trace;
  trace.dim = s.dim;
  trace.dt = dt;
  trace.mass = s.object.mass;
  const Vec n = s.normal();
  const double M = s.object.mass;
  const auto steps = static_cast<long>(std::floor(duration / dt + 1e-9));
  trace.samples.reserve(static_cast<std::size_t>(steps) + 1);
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Reference r = ref_at(t);
    const ImpedanceSegment g = gains_at(t);
    const Vec p = s.contact_point_world(b.y);
    double gap = (p - b.c).dot(n);
    if (!b.attached && gap <= 0.0) b.attached = true;
    double force = 0.0;
    if (b.attached) {
      b.c = p;
      b.cdot = b.ydot;
      gap = std::min(gap, 0.0);
      force = (g.K * (r.c - b.c) + g.B * (r.cdot - b.cdot)).dot(n);
      if (force <= 0.0) {
        force = 0.0;
        b.attached = false;
      }
    }
    SimSample smp;
    smp.t = t;
    smp.y = b.y;
    smp.ydot = b.ydot;
    smp.c = b.c;
    smp.cdot = b.cdot;
    smp.c_ref = r.c;
    smp.force = force;
    smp.gap = gap;
    smp.damper_power = g.B * (b.cdot - r.cdot).squaredNorm();
    trace.samples.push_back(std::move(smp));

    b.ydot += dt * force / M * n;
    b.y += dt * b.ydot;
    if (b.attached) {
      b.c = s.contact_point_world(b.y);
      b.cdot = b.ydot;
    } else {
      const Vec a = r.cddot + (g.B * (r.cdot - b.cdot) + g.K * (r.c - b.c)) / g.M;
      b.cdot += dt * a;
      b.c += dt * b.cdot;
    }
  }
  return trace;
}

void check_dt(double dt) {
  if (!(dt > 0.0 && dt <= 1e-3 + 1e-15)) throw std::invalid_argument("sim: dt must lie in (0, 1e-3] s");
}

}  // namespace

SimTrace simulate_rollout(const Trajectory& traj, const ImpedanceSchedule& sched, const Scenario& s, double dt) {
  check_dt(dt);
  if (traj.knots.size() < 2) throw std::invalid_argument("sim: trajectory needs at least two knots");
  if (sched.segments.empty()) throw std::invalid_argument("sim: empty impedance schedule");
  if (sched.segments.size() > traj.modes.modes.size())
    throw std::invalid_argument("sim: schedule has more segments than the trajectory has modes");
  for (const auto& seg : sched.segments)
    if (!(seg.M > 0.0 && seg.K > 0.0 && seg.B >= 0.0))
      throw std::invalid_argument("sim: schedule gains must satisfy M > 0, K > 0, B >= 0");
  for (const auto& k : traj.knots)
    if (k.c.size() != s.dim || k.y.size() != s.dim)
      throw std::invalid_argument("sim: trajectory dimension does not match the scenario");

  Body b;
  b.y = traj.knots.front().y;
  b.ydot = traj.knots.front().ydot;
  b.c = traj.knots.front().c;
  b.cdot = traj.knots.front().cdot;
  return run(
      s, b, std::max(traj.duration(), s.sim.horizon), dt, [&](double t) { return reference_at(traj, t); },
      [&](double t) { return sched.at(t); });
}

SimTrace simulate_compliance_only(double K, const Scenario& s, double dt) {
  check_dt(dt);
  if (!(K > 0.0)) throw std::invalid_argument("sim: stiffness must be positive");
  const double mv = s.sim.virtual_mass.value_or(s.object.mass);
  ImpedanceSegment g;
  g.K = K;
  g.M = mv;
  g.B = 2.0 * std::sqrt(mv * K);

  const Vec p0 = s.contact_point_world(s.task.y0);
  Vec park = p0.cwiseMax(s.workspace.lower).cwiseMin(s.workspace.upper);
  double t_touch = 0.0;
  const auto [t_in, t_out] = s.workspace.crossing(p0, s.task.ydot0);
  if (t_in <= t_out && t_out >= 0.0) {
    t_touch = std::max(0.0, t_in);
    park = p0 + t_touch * s.task.ydot0;
  }
  if (s.task.ee_start) park = *s.task.ee_start;
  Reference r{park, Vec::Zero(s.dim), Vec::Zero(s.dim)};
  Body b;
  b.y = s.task.y0;
  b.ydot = s.task.ydot0;
  b.c = park;
  b.cdot = Vec::Zero(s.dim);
  return run(
      s, b, t_touch + s.sim.hold_time, dt, [&](double) { return r; }, [&](double) { return g; });
}

ContactOutcome detect_contact_outcome(const SimTrace& trace) {
  const int first = trace.first_touch();
  if (first < 0) return ContactOutcome::missed;
  double reopened = 0.0;
  for (std::size_t i = static_cast<std::size_t>(first); i < trace.samples.size(); ++i)
    reopened = std::max(reopened, trace.samples[i].gap);
  return reopened > 5e-3 ? ContactOutcome::rebound : ContactOutcome::maintained;
}

EnergyBalance energy_balance(const SimTrace& trace) {
  EnergyBalance e;
  const int first = trace.first_touch();
  if (first < 0) return e;
  const auto& S = trace.samples;
  const double v0 = S[first].ydot.squaredNorm();
  const double v1 = S.back().ydot.squaredNorm();
  e.kinetic_loss = 0.5 * trace.mass * (v0 - v1);
  for (std::size_t i = static_cast<std::size_t>(first); i + 1 < S.size(); ++i)
    e.damper_energy += 0.5 * (S[i].damper_power + S[i + 1].damper_power) * (S[i + 1].t - S[i].t);
  e.relative_error = e.kinetic_loss != 0.0 ? std::abs(e.damper_energy - e.kinetic_loss) / std::abs(e.kinetic_loss)
                                           : (e.damper_energy == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return e;
}

FrictionFit fit_rolling_friction(std::span<const PositionSample> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 5) throw std::invalid_argument("fit_rolling_friction: need at least 5 samples");
  for (Eigen::Index i = 1; i < n; ++i)
    if (samples[i].t < samples[i - 1].t) throw std::invalid_argument("fit_rolling_friction: samples must be time-ordered");
  if (samples.front().t == samples.back().t)
    throw std::invalid_argument("fit_rolling_friction: degenerate design matrix (all times equal)");

  Eigen::VectorXd p(n);
  Eigen::MatrixXd A(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = samples[i].t;
    A(i, 0) = 1.0;
    A(i, 1) = t;
    A(i, 2) = -0.5 * t * t;
    p[i] = samples[i].position;
  }
  const auto qr = A.colPivHouseholderQr();
  Eigen::Vector3d coef = Eigen::Vector3d::Zero();
  if (qr.rank() == 3) coef = qr.solve(p);
  // Deceleration opposes the initial velocity.
  if (qr.rank() < 3 || coef[2] * (coef[1] >= 0.0 ? 1.0 : -1.0) < 0.0) {
    coef.head(2) = A.leftCols(2).colPivHouseholderQr().solve(p);
    coef[2] = 0.0;
  }
  FrictionFit fit;
  fit.p0 = coef[0];
  fit.v0 = coef[1];
  fit.decel = std::abs(coef[2]);
  const double ss_tot = (p.array() - p.mean()).square().sum();
  const double ss_res = (p - A * coef).squaredNorm();
  if (ss_tot <= 1e-24 * std::max(1.0, p.squaredNorm())) {
    fit.p0 = p.mean();
    fit.v0 = 0.0;
    fit.decel = 0.0;
    fit.r_squared = 1.0;
  } else {
    fit.r_squared = 1.0 - ss_res / ss_tot;
  }
  return fit;
}

double predict_velocity(const FrictionFit& fit, double t) {
  const double dir = fit.v0 >= 0.0 ? 1.0 : -1.0;
  const double speed = std::abs(fit.v0) - fit.decel * t;
  return speed > 0.0 ? dir * speed : 0.0;
}

double predict_position(const FrictionFit& fit, double t) {
  const double dir = fit.v0 >= 0.0 ? 1.0 : -1.0;
  const double speed = std::abs(fit.v0);
  const double t_stop = fit.decel > 0.0 ? speed / fit.decel : std::numeric_limits<double>::infinity();
  const double tau = std::min(t, t_stop);
  return fit.p0 + dir * (speed * tau - 0.5 * fit.decel * tau * tau);
}

}  // namespace impactplan::sim
