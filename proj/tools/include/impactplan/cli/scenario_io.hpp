#pragma once

// JSON scenario files.
//
// Layout (vectors take a number or an array; a number is a 1-vector):
//   spatial_dim?                   defaults to the length of task.y0
//   object    {mass, inertia?, surface_points, contact_point, contact_normal}
//   workspace {lower, upper}
//   task      {y0, ydot0, yN?, ydotN?, friction_mu?, f_max?, alpha_bounds?,
//              dt_bounds?, ee_accel_max?, ee_start?}
//   modes     [{k, l, knots}]
//   solver?   {tolerances? {feas, opt}, max_iters? {outer, inner},
//              weights? {force, accel, time, stiffness}, penalty? {initial, growth, max},
//              inner_method? "structured" | "lbfgs", lbfgs_memory?}
//   sim?      {dt, virtual_mass, hold_time, horizon}
// Unknown keys are errors.

#include <stdexcept>
#include <string>
#include <vector>

#include "impactplan/types.hpp"

namespace impactplan::cli {

struct ScenarioFile {
  Scenario scenario;
  ModeSequence modes;
};

/// One problem found in a scenario document. line is 0 when unknown.
struct Diagnostic {
  int line = 0;
  std::string field;  // dotted path, e.g. "object.mass" or "modes[1].k"
  std::string message;

  std::string str() const;
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<Diagnostic> d);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

/// Parses and validates (validate_scenario plus the mode sequence checks).
/// Throws ScenarioError listing every problem found.
ScenarioFile parse_scenario(const std::string& text);

/// Reads path and parses it. Throws ScenarioError, also for unreadable files.
ScenarioFile load_scenario(const std::string& path);

}  // namespace impactplan::cli
