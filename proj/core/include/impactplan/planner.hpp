#pragma once

// Multi-mode direct transcription of the impact-aware planning problem.
//
// Decision variables per knot i (dim = nu):
//   y, ydot, c, cdot, cddot   object and end-effector kinematics (5 nu)
//   f, fdot, fddot            contact force on the object and derivatives (3 nu)
//   dT                        time to the next knot
// plus, for every contact mode, its force-model rate alpha_l and target force
// f_d,l. Interval i -> i+1 is governed by the mode of knot i.

#include <string>
#include <vector>

#include "impactplan/nlp/problem.hpp"
#include "impactplan/nlp/solver.hpp"
#include "impactplan/types.hpp"

namespace impactplan::planner {

enum class Quantity { y = 0, ydot, c, cdot, cddot, f, fdot, fddot, dt };

/// With `transmission` contact forces follow the critically damped force model
/// of each stage; with `agnostic` they are free, bounded decision variables.
enum class ForceModel { transmission, agnostic };

/// Separation kept between end-effector and object in free motion, m.
inline constexpr double kSeparationMargin = 1e-4;
/// Largest force allowed at the last contact knot before free motion, N.
inline constexpr double kContactBreakForce = 0.5;
/// Tie-breaking weights of the impact-agnostic objective inside contact, on
/// (f_{i+1} - f_i)^2 in N^2 and (dT_{i+1} - dT_i)^2 in s^2. Without a force
/// model the trapezoidal dynamics only fix f_i + f_{i+1} and the cost only
/// fixes the total contact time, so these pick the smoothest optimum.
inline constexpr double kAgnosticForceVariationWeight = 1e-4;
inline constexpr double kAgnosticMeshVariationWeight = 1e3;
/// End-effector standoff along the normal used by the initial guess, m.
inline constexpr double kGuessStandoff = 0.1;

struct ConstraintInfo {
  std::string name;
  std::string kind;  // "eq" or "ineq"
  int first_knot = 0;
  int last_knot = 0;
  std::string mode_condition;
  int rows = 0;
};

class TranscriptionLayout {
 public:
  TranscriptionLayout() = default;
  TranscriptionLayout(int dim, const ModeSequence& z, ForceModel model, double force_scale);

  int dim() const { return dim_; }
  int knots() const { return n_knots_; }
  int knot_stride() const { return 8 * dim_ + 1; }
  int n_vars() const { return n_vars_; }
  int knot_variable_count() const { return n_knots_ * knot_stride(); }
  int stage_count() const { return static_cast<int>(stage_modes_.size()); }
  ForceModel force_model() const { return model_; }

  int index(int knot, Quantity q, int component = 0) const;
  int alpha_index(int stage) const;
  int fd_index(int stage) const;
  /// Stage ordinal of a contact mode, or -1.
  int stage_of_mode(int mode) const;
  const std::vector<int>& stage_modes() const { return stage_modes_; }
  const std::vector<int>& knot_modes() const { return knot_modes_; }

  /// Physical value = solver value * scale.
  const std::vector<double>& scales() const { return scales_; }
  double force_scale() const { return force_scale_; }

  std::vector<ConstraintInfo>& constraints() { return constraints_; }
  const std::vector<ConstraintInfo>& constraints() const { return constraints_; }

  nlp::Vector to_physical(const nlp::Vector& x) const;
  nlp::Vector to_solver(const nlp::Vector& phys) const;

 private:
  int dim_ = 1;
  int n_knots_ = 0;
  int n_vars_ = 0;
  ForceModel model_ = ForceModel::transmission;
  double force_scale_ = 10.0;
  std::vector<int> stage_modes_;
  std::vector<int> knot_modes_;
  std::vector<double> scales_;
  std::vector<ConstraintInfo> constraints_;
};

struct Transcription {
  nlp::NlpProblem problem;  // in solver (scaled) variables
  TranscriptionLayout layout;
};

/// Throws std::invalid_argument when the scenario or mode sequence is invalid.
Transcription transcribe(const Scenario& s, const ModeSequence& z,
                         ForceModel model = ForceModel::transmission);

struct ConeCheck {
  bool inside = false;
  Vec weights;  // coefficients on the cone edges n + mu t and n - mu t
};

/// Decomposes f on the friction-cone edge generators. For dim = 1 the cone is
/// the ray along the normal and the single weight is f . n.
ConeCheck friction_cone_check(const Vec& f, const Vec& normal, double mu);

/// Physical-unit initial guess (see TranscriptionLayout::to_solver).
nlp::Vector initial_guess(const Scenario& s, const ModeSequence& z,
                          ForceModel model = ForceModel::transmission);

/// Physical-unit starting point used by plan(): the object coasts until its
/// contact point enters the workspace box, then the first contact stage brakes
/// it towards the goal under the force model, integrated with the same
/// quadrature as the transcription. Falls back to initial_guess when the
/// object is at rest or never reaches the box.
nlp::Vector motion_seed(const Scenario& s, const ModeSequence& z,
                        ForceModel model = ForceModel::transmission);

Trajectory extract_trajectory(const TranscriptionLayout& layout, const ModeSequence& z,
                              const nlp::Vector& physical);

/// One segment per mode. Contact segments use the stage alpha (or alpha_max
/// when the plan has no stages) with the object mass; free-motion segments use
/// alpha_max with the virtual end-effector mass.
ImpedanceSchedule impedance_schedule(const Trajectory& traj, const Scenario& s);

struct PlanResult {
  Trajectory trajectory;
  ImpedanceSchedule schedule;
  nlp::Solution solution;
  std::string diagnostics;  // worst constraint rows when not converged

  bool converged() const { return solution.converged(); }
};

PlanResult plan(const Scenario& s, const ModeSequence& z);

/// Same transcription without the force model and stage variables. The
/// objective keeps the acceleration and time terms plus the contact
/// tie-breakers above; the force term is dropped.
PlanResult plan_impact_agnostic(const Scenario& s, const ModeSequence& z);

struct ResidualReport {
  double max_abs = 0.0;
  std::string worst;
  int rows = 0;
};

/// Re-evaluates every transcription constraint from a Trajectory with
/// independent code, in the same normalized units as the transcription.
ResidualReport recheck_constraints(const Scenario& s, const Trajectory& traj, ForceModel model);

struct SweepRow {
  double workspace = 0.0;  // half-width along axis 0, m
  double goal = 0.0;       // goal object position along axis 0, m
  double alpha_neg = 0.0;
  double alpha_pos = 0.0;
  double peak_force = 0.0;        // N
  double contact_duration = 0.0;  // s
  std::string status;
  Trajectory trajectory;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Plans every (workspace, goal) pair, workspaces outermost. Each row's box is
/// the scenario box with axis 0 replaced by center +- half-width. Rows may be
/// solved concurrently (IMPACTPLAN_THREADS caps the worker count); the output
/// order is fixed.
SweepResult sweep(const Scenario& s, const ModeSequence& z, const std::vector<double>& workspaces,
                  const std::vector<double>& goals);

/// The scenario a sweep row plans.
Scenario sweep_scenario(const Scenario& s, double workspace, double goal);

}  // namespace impactplan::planner
