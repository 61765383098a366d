#include "impactplan/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "impactplan/cli/csv.hpp"
#include "impactplan/planner.hpp"
#include "impactplan/sim.hpp"
#include "json.hpp"

namespace impactplan::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void report(const ScenarioError& e, std::ostream& err) {
  for (const auto& d : e.diagnostics()) err << "error: " << d.str() << '\n';
}

std::optional<ScenarioFile> load(const std::string& path, const Overrides& o, std::ostream& err) {
  try {
    ScenarioFile f = load_scenario(path);
    apply_overrides(o, f);
    return f;
  } catch (const ScenarioError& e) {
    err << path << ":\n";
    report(e, err);
    return std::nullopt;
  }
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

json plan_summary(const planner::PlanResult& r) {
  json j;
  j["status"] = nlp::to_string(r.solution.status);
  j["peak_force"] = r.trajectory.peak_force();
  j["contact_duration"] = r.trajectory.contact_duration();
  j["duration"] = r.trajectory.duration();
  j["iterations"] = r.solution.iterations;
  j["solve_time"] = r.solution.wall_time;
  j["max_violation"] = r.solution.max_violation;
  j["alpha"] = json::array();
  for (const auto& st : r.trajectory.stages)
    j["alpha"].push_back({{"mode", st.mode}, {"stage", st.stage}, {"alpha", st.alpha}, {"f_desired", st.f_desired}});
  return j;
}

// Planned normal force at time t, linear between knots.
double planned_force_at(const Trajectory& traj, const Vec& n, double t) {
  const auto& K = traj.knots;
  if (t <= K.front().t) return traj.normal_force(0, n);
  for (std::size_t i = 0; i + 1 < K.size(); ++i) {
    if (t <= K[i + 1].t) {
      const double h = K[i + 1].t - K[i].t;
      const double w = h > 0.0 ? (t - K[i].t) / h : 1.0;
      return (1.0 - w) * traj.normal_force(static_cast<int>(i), n) + w * traj.normal_force(static_cast<int>(i + 1), n);
    }
  }
  return 0.0;
}

void write_rollout_csv(const fs::path& p, const Trajectory& traj, const sim::SimTrace& tr, const Vec& n) {
  CsvWriter w(p.string(), {"time", "pos_error", "force_plan", "force_measured"});
  for (const auto& s : tr.samples)
    w.row({s.t, std::max(s.gap, 0.0), planned_force_at(traj, n, s.t), s.force});
}

std::vector<std::string> format_row(const std::vector<double>& v) {
  std::vector<std::string> out;
  for (double x : v) out.push_back(format_fixed6(x));
  return out;
}

}  // namespace

void apply_overrides(const Overrides& o, ScenarioFile& f) {
  Scenario& s = f.scenario;
  if (o.dt) s.sim.dt = *o.dt;
  if (o.knots)
    for (auto& k : f.modes.knots_per_mode) k = *o.knots;
  if (o.weights) {
    s.weights.force = (*o.weights)[0];
    s.weights.accel = (*o.weights)[1];
    s.weights.time = (*o.weights)[2];
  }
  if (o.alpha_max) s.task.alpha_max = *o.alpha_max;
  std::vector<Diagnostic> d;
  for (const auto& m : validate_scenario(s)) d.push_back({0, "", m});
  for (const auto& m : f.modes.violations()) d.push_back({0, "", m});
  if (!(s.sim.dt > 0.0 && s.sim.dt <= 1e-3)) d.push_back({0, "sim.dt", "must lie in (0, 0.001] s"});
  if (o.weights)
    for (double w : *o.weights)
      if (!(w >= 0.0)) d.push_back({0, "--weights", "weights must be >= 0"});
  if (!d.empty()) throw ScenarioError(std::move(d));
}

int cmd_plan(const std::string& scenario_path, const std::string& out_dir, const Overrides& o, std::ostream& out,
             std::ostream& err) {
  const auto f = load(scenario_path, o, err);
  if (!f) return kExitInput;
  const Scenario& s = f->scenario;
  planner::PlanResult r;
  try {
    r = planner::plan(s, f->modes);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    fs::create_directories(out_dir);
    const Vec n = s.normal();
    const int d = s.dim;
    std::vector<std::string> cols{"time", "force", "pos", "vel", "ee_pos", "ee_vel", "alpha", "K", "B", "mode_k", "mode_l"};
    for (int k = 1; k < d; ++k)
      for (const char* c : {"pos", "vel", "ee_pos", "ee_vel"}) cols.push_back(std::string(c) + "_" + std::to_string(k));
    CsvWriter w((fs::path(out_dir) / "plan.csv").string(), cols);
    const auto& traj = r.trajectory;
    for (int i = 0; i < static_cast<int>(traj.knots.size()); ++i) {
      const KnotState& kn = traj.knots[i];
      const Mode& m = traj.mode_at(i);
      const StageParams* st = traj.stage_for_mode(kn.mode);
      const ImpedanceSegment& g = r.schedule.at(kn.t);
      std::vector<double> row{kn.t,     traj.normal_force(i, n), kn.y[0], kn.ydot[0], kn.c[0], kn.cdot[0],
                              st ? st->alpha : 0.0, g.K, g.B, double(m.contact), double(m.stage)};
      for (int k = 1; k < d; ++k) {
        row.push_back(kn.y[k]);
        row.push_back(kn.ydot[k]);
        row.push_back(kn.c[k]);
        row.push_back(kn.cdot[k]);
      }
      w.row(row);
    }
    CsvWriter sw((fs::path(out_dir) / "schedule.csv").string(), {"time", "K", "B", "M", "mode"});
    for (const auto& seg : r.schedule.segments) sw.row({seg.t, seg.K, seg.B, seg.M, double(seg.mode)});
    json j = plan_summary(r);
    if (!r.converged()) j["diagnostics"] = r.diagnostics;
    write_json(fs::path(out_dir) / "summary.json", j);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  out << "status " << nlp::to_string(r.solution.status) << '\n'
      << "peak_force " << format_fixed6(r.trajectory.peak_force()) << '\n'
      << "contact_duration " << format_fixed6(r.trajectory.contact_duration()) << '\n';
  for (const auto& st : r.trajectory.stages)
    out << "alpha[mode " << st.mode << ", l " << st.stage << "] " << format_fixed6(st.alpha) << '\n';
  if (!r.converged()) {
    err << "solver did not converge\n" << r.diagnostics << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_ablate(const std::string& scenario_path, const std::string& out_dir, const Overrides& o, double K,
               std::ostream& out, std::ostream& err) {
  auto f = load(scenario_path, o, err);
  if (!f) return kExitInput;
  if (!(K > 0.0)) {
    err << "error: compliance stiffness must be > 0\n";
    return kExitInput;
  }
  Scenario& s = f->scenario;
  planner::PlanResult aware, agnostic;
  sim::SimTrace aware_tr, agnostic_tr, comp;
  try {
    aware = planner::plan(s, f->modes);
    agnostic = planner::plan_impact_agnostic(s, f->modes);
    s.sim.horizon = std::max({s.sim.horizon, aware.trajectory.duration(), agnostic.trajectory.duration()});
    aware_tr = sim::simulate_rollout(aware.trajectory, aware.schedule, s, s.sim.dt);
    agnostic_tr = sim::simulate_rollout(agnostic.trajectory, agnostic.schedule, s, s.sim.dt);
    comp = sim::simulate_compliance_only(K, s, s.sim.dt);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  const Vec n = s.normal();
  json j;
  auto method = [&](const planner::PlanResult& r, const sim::SimTrace& tr) {
    json m = plan_summary(r);
    m["outcome"] = sim::to_string(sim::detect_contact_outcome(tr));
    m["rollout_peak_force"] = tr.peak_force();
    return m;
  };
  j["impact_aware"] = method(aware, aware_tr);
  j["impact_agnostic"] = method(agnostic, agnostic_tr);
  j["compliance"] = {{"K", K},
                     {"peak_force", comp.peak_force()},
                     {"outcome", sim::to_string(sim::detect_contact_outcome(comp))}};
  j["horizon"] = s.sim.horizon;
  const double aware_peak = aware_tr.peak_force();
  j["compliance_to_aware_peak_ratio"] = aware_peak > 0.0 ? comp.peak_force() / aware_peak : 0.0;

  try {
    fs::create_directories(out_dir);
    write_rollout_csv(fs::path(out_dir) / "force_impact_aware.csv", aware.trajectory, aware_tr, n);
    write_rollout_csv(fs::path(out_dir) / "force_impact_agnostic.csv", agnostic.trajectory, agnostic_tr, n);
    CsvWriter w((fs::path(out_dir) / "compliance_baseline.csv").string(), {"time", "force"});
    for (const auto& smp : comp.samples) w.row({smp.t, smp.force});
    write_json(fs::path(out_dir) / "ablation_summary.json", j);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  out << "impact_aware " << j["impact_aware"]["outcome"].get<std::string>() << " status "
      << nlp::to_string(aware.solution.status) << " planned_peak " << format_fixed6(aware.trajectory.peak_force())
      << " rollout_peak " << format_fixed6(aware_peak) << '\n'
      << "impact_agnostic " << j["impact_agnostic"]["outcome"].get<std::string>() << " status "
      << nlp::to_string(agnostic.solution.status) << " planned_peak "
      << format_fixed6(agnostic.trajectory.peak_force()) << " rollout_peak "
      << format_fixed6(agnostic_tr.peak_force()) << '\n'
      << "compliance " << j["compliance"]["outcome"].get<std::string>() << " K " << format_fixed6(K) << " peak "
      << format_fixed6(comp.peak_force()) << '\n';
  if (!aware.converged() || !agnostic.converged()) {
    err << "solver did not converge\n";
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::vector<double>& workspaces,
              const std::vector<double>& goals, const std::string& out_csv, const Overrides& o, std::ostream& out,
              std::ostream& err) {
  if (workspaces.empty() || goals.empty()) {
    err << "error: sweep needs at least one workspace and one goal\n";
    return kExitInput;
  }
  const auto f = load(scenario_path, o, err);
  if (!f) return kExitInput;
  std::vector<std::string> bad;
  for (double w : workspaces)
    for (double g : goals)
      for (const auto& m : validate_scenario(planner::sweep_scenario(f->scenario, w, g)))
        bad.push_back("workspace " + format_fixed6(w) + ", goal " + format_fixed6(g) + ": " + m);
  if (!bad.empty()) {
    for (const auto& m : bad) err << "error: " << m << '\n';
    return kExitInput;
  }

  const planner::SweepResult res = planner::sweep(f->scenario, f->modes, workspaces, goals);
  bool all_ok = true;
  try {
    const fs::path csv(out_csv);
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    CsvWriter w(out_csv, {"workspace", "goal", "alpha_neg", "alpha_pos", "peak_force", "contact_duration", "status"});
    const Vec n = f->scenario.normal();
    for (std::size_t k = 0; k < res.rows.size(); ++k) {
      const auto& r = res.rows[k];
      auto cells = format_row({r.workspace, r.goal, r.alpha_neg, r.alpha_pos, r.peak_force, r.contact_duration});
      cells.push_back(r.status);
      w.row_text(cells);
      all_ok = all_ok && r.status == "converged";
      const fs::path prof = csv.parent_path() / (csv.stem().string() + "_row" + std::to_string(k) + ".csv");
      CsvWriter pw(prof.string(), {"time", "force"});
      for (int i = 0; i < static_cast<int>(r.trajectory.knots.size()); ++i)
        pw.row({r.trajectory.knots[i].t, r.trajectory.normal_force(i, n)});
      out << "workspace " << format_fixed6(r.workspace) << " goal " << format_fixed6(r.goal) << " alpha_neg "
          << format_fixed6(r.alpha_neg) << " alpha_pos " << format_fixed6(r.alpha_pos) << " peak "
          << format_fixed6(r.peak_force) << " " << r.status << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return all_ok ? kExitOk : kExitSolver;
}

int cmd_fit(const std::string& samples_csv, double horizon, std::ostream& out, std::ostream& err) {
  std::vector<sim::PositionSample> samples;
  try {
    const CsvTable t = read_csv(samples_csv);
    const int ct = t.column("time"), cp = t.column("pos");
    if (ct < 0 || cp < 0) {
      err << "error: " << samples_csv << ": header must name columns time and pos\n";
      return kExitInput;
    }
    for (const auto& row : t.rows) samples.push_back({row[ct], row[cp]});
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  sim::FrictionFit fit;
  try {
    fit = sim::fit_rolling_friction(samples);
  } catch (const std::exception& e) {
    err << "error: " << samples_csv << ": " << e.what() << '\n';
    return kExitInput;
  }
  const double t_end = samples.back().t + horizon;
  const double t_stop = fit.decel > 0.0 ? std::abs(fit.v0) / fit.decel : std::numeric_limits<double>::infinity();
  out << "p0 " << format_fixed6(fit.p0) << '\n'
      << "v0 " << format_fixed6(fit.v0) << '\n'
      << "decel " << format_fixed6(fit.decel) << '\n'
      << "r_squared " << format_fixed6(fit.r_squared) << '\n';
  if (std::isfinite(t_stop))
    out << "stop_time " << format_fixed6(t_stop) << '\n'
        << "stop_position " << format_fixed6(sim::predict_position(fit, t_stop)) << '\n';
  out << "predicted_time " << format_fixed6(t_end) << '\n'
      << "predicted_position " << format_fixed6(sim::predict_position(fit, t_end)) << '\n'
      << "predicted_velocity " << format_fixed6(sim::predict_velocity(fit, t_end)) << '\n';
  return kExitOk;
}

}  // namespace impactplan::cli
