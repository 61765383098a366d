#pragma once

// Rollout simulator for planned trajectories and the compliance-only baseline,
// plus the rolling-friction motion estimator.
//
// The end-effector is an impedance-controlled point mass tracking a reference.
// While it touches the object it rides on the object's contact point and
// pushes with K (c_ref - c) + B (cdot_ref - cdot) along the contact normal,
// clamped at zero. Contact releases when that force would pull.

#include <span>
#include <vector>

#include "impactplan/types.hpp"

namespace impactplan::sim {

struct SimSample {
  double t = 0.0;
  Vec y, ydot;      // object, m and m/s
  Vec c, cdot;      // end-effector, m and m/s
  Vec c_ref;        // reference position, m
  double force = 0.0;          // on the object along the contact normal, N
  double gap = 0.0;            // end-effector to contact point along the normal, m
  double damper_power = 0.0;   // B |cdot - cdot_ref|^2, W
};

struct SimTrace {
  int dim = 1;
  double dt = 0.0;
  double mass = 0.0;  // object, kg
  std::vector<SimSample> samples;

  double peak_force() const;
  /// Index of the first sample with gap <= 0, or -1.
  int first_touch() const;
};

/// Semi-implicit Euler rollout of a plan: the reference is the planned
/// end-effector path (velocity linear between knots), gains follow the
/// schedule. The run lasts until max(plan end, s.sim.horizon), with the
/// reference held at its final position after the plan ends. Throws
/// std::invalid_argument for dt outside (0, 1 ms] or a schedule that does not
/// match the trajectory.
SimTrace simulate_rollout(const Trajectory& traj, const ImpedanceSchedule& sched, const Scenario& s,
                          double dt = 1e-3);

/// Object released at (y0, ydot0) towards an end-effector held still with
/// stiffness K and B = 2 sqrt(M_v K). The end-effector waits at
/// task.ee_start, or else where the object's contact point enters the
/// workspace (at the box point nearest the start when it never does). Runs
/// for s.sim.hold_time past the box entry.
SimTrace simulate_compliance_only(double K, const Scenario& s, double dt = 1e-3);

enum class ContactOutcome { maintained, rebound, missed };

std::string to_string(ContactOutcome o);

/// missed: never touches. rebound: the gap reopens by more than 5 mm at any
/// time after the first touch, even after the object has come to rest.
/// maintained: otherwise. Judge traces of competing plans over the same
/// horizon.
ContactOutcome detect_contact_outcome(const SimTrace& trace);

struct EnergyBalance {
  double kinetic_loss = 0.0;    // object, J
  double damper_energy = 0.0;   // J
  double relative_error = 0.0;  // |damper - loss| / loss
};

/// From the first touch to the end of the trace, trapezoidal in the damper
/// power. All zeros when the trace never touches.
EnergyBalance energy_balance(const SimTrace& trace);

struct FrictionFit {
  double p0 = 0.0;         // m
  double v0 = 0.0;         // m/s
  double decel = 0.0;      // m/s^2, opposing v0
  double r_squared = 1.0;  // against the fitted model
};

struct PositionSample {
  double t = 0.0;  // s
  double position = 0.0;  // m
};

/// Least squares of p(t) = p0 + v0 t - sign(v0) decel t^2 / 2. A fit that
/// would need decel < 0 (or has only two distinct times) is redone with
/// decel = 0. Constant positions give v0 = decel = 0 and r^2 = 1. Throws
/// std::invalid_argument for fewer than 5 samples, unordered times or all
/// times equal.
FrictionFit fit_rolling_friction(std::span<const PositionSample> samples);

/// Integrates the fitted motion forward; the object stays put once it stops.
double predict_position(const FrictionFit& fit, double t);
double predict_velocity(const FrictionFit& fit, double t);

}  // namespace impactplan::sim
