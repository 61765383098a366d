#pragma once

// Domain value types shared by the planner, the simulator and the I/O layer.
//
// Conventions:
//  * `dim` is the spatial dimension (1 or 2) of object and end-effector
//    positions. The vertical axis is not modelled: the object rests on a table
//    that cancels gravity, and there is no sliding friction with the table.
//  * Object poses are translations only; the heading is held fixed.
//  * The surface spline, contact point and contact normal are expressed in the
//    object frame. For dim = 1 the motion axis is the frame's x axis.

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "impactplan/geometry.hpp"
#include "impactplan/nlp/solver.hpp"

namespace impactplan {

using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

struct ObjectModel {
  double mass = 0.0;     // kg
  double inertia = 0.0;  // kg m^2, planar scalar
  geometry::SurfaceSpline surface;
  Vec2 contact_point = Vec2::Zero();  // m, on the surface
  Vec contact_normal;                 // unit, dim entries, pointing into the object
};

struct Workspace {
  Vec lower;  // m
  Vec upper;  // m

  /// Times [first, second] during which p0 + v t lies inside the box; empty
  /// when first > second.
  std::pair<double, double> crossing(const Vec& p0, const Vec& v) const;
};

/// Contact state k (0 free, 1 in contact) and controller stage l (-1
/// deformation, +1 restitution, 0 free motion).
struct Mode {
  int contact = 0;
  int stage = 0;

  bool in_contact() const { return contact == 1; }
  bool operator==(const Mode&) const = default;

  static Mode free_motion() { return {0, 0}; }
  static Mode deformation() { return {1, -1}; }
  static Mode restitution() { return {1, 1}; }
};

std::string to_string(const Mode& m);

struct ModeSequence {
  std::vector<Mode> modes;
  std::vector<int> knots_per_mode;

  int total_knots() const;
  /// Mode index for every knot, in order.
  std::vector<int> knot_modes() const;
  /// First knot index of each mode.
  std::vector<int> mode_starts() const;
  int contact_stage_count() const;

  /// Empty when well-formed; otherwise one message per problem.
  std::vector<std::string> violations() const;
};

struct Task {
  Vec y0;                    // m
  Vec ydot0;                 // m/s
  std::optional<Vec> yN;     // m
  std::optional<Vec> ydotN;  // m/s
  double friction_mu = 0.5;
  double f_max = 100.0;  // N
  double alpha_min = 0.5;  // 1/s
  double alpha_max = 20.0;
  double dt_min = 0.005;  // s
  double dt_max = 0.2;
  double ee_accel_max = 10.0;   // m/s^2, per component
  std::optional<Vec> ee_start;  // m; end-effector pinned here at rest when set
};

struct ObjectiveWeights {
  double force = 1.0;  // on sum |f|^2 dT
  double accel = 0.1;  // on sum |c''|^2 dT
  double time = 1.0;   // on sum dT
  /// On sum(-l * alpha_l): soft deformation stages, stiff restitution stages.
  double stiffness = 4.0;
};

struct SimSettings {
  double dt = 1e-3;                    // s
  std::optional<double> virtual_mass;  // kg; defaults to the object mass
  double hold_time = 1.0;              // s simulated past the compliance-only touch
  double horizon = 0.0;                // s; a rollout runs until max(plan end, horizon)
};

struct Scenario {
  ObjectModel object;
  Workspace workspace;
  Task task;
  int dim = 1;
  ObjectiveWeights weights;
  nlp::SolverOptions solver;
  SimSettings sim;

  /// Contact point in world coordinates for an object position (first dim
  /// entries of the object-frame point).
  Vec contact_point_world(const Vec& y) const;
  Vec normal() const { return object.contact_normal; }
};

/// Empty iff every invariant holds. Each message names the field and bound.
std::vector<std::string> validate_scenario(const Scenario& s);

struct KnotState {
  Vec y, ydot;              // object position m, velocity m/s
  Vec c, cdot, cddot;       // end-effector m, m/s, m/s^2
  Vec f, fdot, fddot;       // contact force on the object N, N/s, N/s^2
  double dt = 0.0;          // s, time to the next knot
  double t = 0.0;           // s, absolute
  int mode = 0;             // index into the mode sequence
};

struct StageParams {
  int mode = 0;              // index into the mode sequence
  int stage = 0;             // l
  double alpha = 0.0;        // 1/s
  double f_desired = 0.0;    // N
};

struct Trajectory {
  int dim = 1;
  ModeSequence modes;
  std::vector<KnotState> knots;
  std::vector<StageParams> stages;  // one per contact mode; empty for the impact-agnostic plan

  const Mode& mode_at(int knot) const { return modes.modes[knots[knot].mode]; }
  const StageParams* stage_for_mode(int mode) const;
  /// Force component along the contact normal at a knot.
  double normal_force(int knot, const Vec& normal) const;
  double peak_force() const;
  /// Time between the first and the last contact knot (0 without contact).
  double contact_duration() const;
  double first_contact_time() const;
  double duration() const { return knots.empty() ? 0.0 : knots.back().t; }
};

struct ImpedanceSegment {
  double t = 0.0;  // s, start
  double K = 0.0;  // N/m
  double B = 0.0;  // N s/m
  double M = 0.0;  // kg
  int mode = 0;
};

struct ImpedanceSchedule {
  std::vector<ImpedanceSegment> segments;

  /// Segment active at time t (the last one starting at or before t).
  const ImpedanceSegment& at(double t) const;
};

/// Trajectory invariants; empty when all hold.
std::vector<std::string> trajectory_violations(const Trajectory& traj, const Scenario& s);

}  // namespace impactplan
