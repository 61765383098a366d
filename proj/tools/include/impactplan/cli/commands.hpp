#pragma once

// The impactplan subcommands. Each returns the process exit code:
// 0 success, 1 input error, 2 solver failure.

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "impactplan/cli/scenario_io.hpp"

namespace impactplan::cli {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitSolver = 2 };

/// Command line settings layered over the scenario file.
struct Overrides {
  std::optional<double> dt;  // rollout step, s
  std::optional<int> knots;  // knots for every mode
  std::optional<std::array<double, 3>> weights;  // w_f, w_a, w_T
  std::optional<double> alpha_max;
};

/// Applies the overrides and revalidates. Throws ScenarioError.
void apply_overrides(const Overrides& o, ScenarioFile& f);

/// Writes plan.csv, schedule.csv and summary.json into out_dir.
int cmd_plan(const std::string& scenario_path, const std::string& out_dir, const Overrides& o, std::ostream& out,
             std::ostream& err);

/// Impact-aware and impact-agnostic plans with rollouts over a shared
/// horizon, plus the compliance-only baseline at stiffness K. Writes
/// force_impact_aware.csv, force_impact_agnostic.csv, compliance_baseline.csv
/// and ablation_summary.json into out_dir.
int cmd_ablate(const std::string& scenario_path, const std::string& out_dir, const Overrides& o, double K,
               std::ostream& out, std::ostream& err);

/// One row per (workspace half-width, goal); force profiles go next to
/// out_csv as <stem>_row<k>.csv. Exit 2 when any row did not converge.
int cmd_sweep(const std::string& scenario_path, const std::vector<double>& workspaces,
              const std::vector<double>& goals, const std::string& out_csv, const Overrides& o, std::ostream& out,
              std::ostream& err);

/// Fits the rolling-friction model to a time,pos CSV and prints the fit and
/// the predicted position horizon seconds after the last sample.
int cmd_fit(const std::string& samples_csv, double horizon, std::ostream& out, std::ostream& err);

}  // namespace impactplan::cli
