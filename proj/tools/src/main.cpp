#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "impactplan/cli/commands.hpp"

using namespace impactplan::cli;

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

void add_overrides(CLI::App* cmd, Overrides& o, std::string& weights) {
  cmd->add_option("--dt", o.dt, "Rollout time step, s (at most 0.001)");
  cmd->add_option("--knots", o.knots, "Knots for every mode");
  cmd->add_option("--weights", weights, "Objective weights w_f,w_a,w_T");
  cmd->add_option("--alpha-max", o.alpha_max, "Upper stiffness bound alpha_max, 1/s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Impact-aware multi-mode trajectory planning"};
  app.require_subcommand(1);

  Overrides o;
  std::string weights, scenario, out_dir = ".";

  auto* plan = app.add_subcommand("plan", "Plan a scenario; writes plan.csv, schedule.csv and summary.json");
  plan->add_option("scenario", scenario, "Scenario JSON file")->required();
  plan->add_option("--out", out_dir, "Output directory");
  add_overrides(plan, o, weights);

  double K = 13600.0;
  auto* ablate = app.add_subcommand("ablate", "Impact-aware vs impact-agnostic vs compliance-only");
  ablate->add_option("scenario", scenario, "Scenario JSON file")->required();
  ablate->add_option("--out", out_dir, "Output directory");
  ablate->add_option("--stiffness", K, "Compliance-only stiffness K, N/m");
  add_overrides(ablate, o, weights);

  std::string ws_list, goal_list, sweep_out = "sweep.csv";
  auto* sweep = app.add_subcommand("sweep", "Workspace and goal sweep");
  sweep->add_option("scenario", scenario, "Scenario JSON file")->required();
  sweep->add_option("--workspaces", ws_list, "Workspace half-widths, comma separated (m)")->required();
  sweep->add_option("--goals", goal_list, "Goal positions, comma separated (m)")->required();
  sweep->add_option("--out", sweep_out, "Output CSV");
  add_overrides(sweep, o, weights);

  std::string samples;
  double horizon = 0.5;
  auto* fit = app.add_subcommand("fit", "Fit a rolling-friction model to time,pos samples");
  fit->add_option("samples", samples, "CSV with header time,pos")->required();
  fit->add_option("--horizon", horizon, "Prediction horizon past the last sample, s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (!weights.empty()) {
      const auto w = parse_list(weights);
      if (w.size() != 3) throw std::invalid_argument("--weights expects w_f,w_a,w_T");
      o.weights = std::array<double, 3>{w[0], w[1], w[2]};
    }
    if (*plan) return cmd_plan(scenario, out_dir, o, std::cout, std::cerr);
    if (*ablate) return cmd_ablate(scenario, out_dir, o, K, std::cout, std::cerr);
    if (*sweep) return cmd_sweep(scenario, parse_list(ws_list), parse_list(goal_list), sweep_out, o, std::cout, std::cerr);
    if (*fit) return cmd_fit(samples, horizon, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
