#include "impactplan/planner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "impactplan/contact.hpp"

namespace impactplan::planner {

nlp::Vector initial_guess(const Scenario& s, const ModeSequence& z, ForceModel model) {
  const TranscriptionLayout L(s.dim, z, model, s.task.f_max / 10.0);
  const Task& task = s.task;
  const int nu = s.dim;
  const int N = L.knots();
  const double h = 0.5 * (task.dt_min + task.dt_max);
  const Vec n = s.normal();

  nlp::Vector x = nlp::Vector::Zero(L.n_vars());
  for (int i = 0; i < N; ++i) {
    const double t = i * h;
    const double u = N > 1 ? static_cast<double>(i) / (N - 1) : 0.0;
    Vec y, ydot;
    if (task.yN) {
      y = (1.0 - u) * task.y0 + u * *task.yN;
      ydot = i == 0 ? task.ydot0 : Vec((*task.yN - task.y0) / (h * std::max(1, N - 1)));
    } else {
      y = task.y0 + t * task.ydot0;
      ydot = task.ydot0;
    }
    Vec c = s.contact_point_world(y);
    const bool in_contact = z.modes[L.knot_modes()[i]].in_contact();
    if (!in_contact) c -= kGuessStandoff * n;
    for (int k = 0; k < nu; ++k) {
      x[L.index(i, Quantity::y, k)] = y[k];
      x[L.index(i, Quantity::ydot, k)] = ydot[k];
      x[L.index(i, Quantity::c, k)] = c[k];
      x[L.index(i, Quantity::cdot, k)] = ydot[k];
    }
    x[L.index(i, Quantity::dt)] = h;
  }
  for (int l = 0; l < L.stage_count(); ++l) x[L.alpha_index(l)] = std::sqrt(task.alpha_min * task.alpha_max);
  return x;
}

nlp::Vector motion_seed(const Scenario& s, const ModeSequence& z, ForceModel model) {
  const Task& task = s.task;
  nlp::Vector x = initial_guess(s, z, model);
  const TranscriptionLayout L(s.dim, z, model, task.f_max / 10.0);
  const int nu = s.dim;
  const int N = L.knots();
  const std::vector<int>& km = L.knot_modes();
  auto in_contact = [&](int i) { return z.modes[km[i]].in_contact(); };
  int first = 0;
  while (first < N && !in_contact(first)) ++first;
  const double speed = task.ydot0.norm();
  if (first == N || speed == 0.0) return x;

  const Vec g0 = s.contact_point_world(task.y0);
  const auto [t_in, t_out] = s.workspace.crossing(g0, task.ydot0);
  if (t_in > t_out || t_out < 0.0) return x;
  const double t_touch = std::max(0.0, t_in);
  const Vec v_end = task.ydotN.value_or(Vec::Zero(nu));
  const Vec y_touch = task.y0 + t_touch * task.ydot0;
  const Vec y_end = task.yN ? *task.yN : Vec(task.y0 + (t_touch + 0.9 * (t_out - t_touch)) * task.ydot0);
  const double v_mean = 0.5 * (task.ydot0 + v_end).norm();
  const double T = v_mean > 0.0 ? (y_end - y_touch).norm() / v_mean : 1.0;

  // Intervals: free motion shares t_touch, the first contact stage carries the
  // braking time T, later contact stages are kept short.
  const int braking_mode = km[first];
  int n_free = first, n_brake = 0;
  for (int i = first; i + 1 < N; ++i)
    if (km[i] == braking_mode) ++n_brake;
  auto clamp_dt = [&](double h) { return std::clamp(h, task.dt_min, task.dt_max); };
  std::vector<double> dt(N, 0.5 * (task.dt_min + task.dt_max));
  for (int i = 0; i + 1 < N; ++i) {
    if (i < first) dt[i] = clamp_dt(t_touch / std::max(1, n_free));
    else if (km[i] == braking_mode) dt[i] = clamp_dt(T / std::max(1, n_brake));
    else if (in_contact(i)) dt[i] = task.dt_min;
  }
  double t_brake = 0.0;
  for (int i = first; i + 1 < N; ++i)
    if (km[i] == braking_mode) t_brake += dt[i];

  const double M = s.object.mass;
  const Vec n = s.normal();
  const double alpha_brake = std::clamp(6.0 / std::max(t_brake, 1e-6), task.alpha_min, task.alpha_max);
  const double dv = (task.ydot0 - v_end).norm();
  const double effective = std::max(t_brake - 2.0 / alpha_brake, 0.25 * t_brake);
  const double fd_brake = std::clamp(M * dv / std::max(effective, 1e-6), 0.0, task.f_max);
  auto stage_params = [&](int mode) -> std::pair<double, double> {
    if (mode == braking_mode) return {alpha_brake, fd_brake};
    return {task.alpha_max, 0.0};
  };

  std::vector<Vec> y(N), ydot(N), f(N), fdot(N), fddot(N);
  y[0] = task.y0;
  ydot[0] = task.ydot0;
  for (int i = 0; i < N; ++i) {
    f[i] = Vec::Zero(nu);
    fdot[i] = Vec::Zero(nu);
    fddot[i] = Vec::Zero(nu);
  }
  for (int i = 0; i + 1 < N; ++i) {
    const double h = dt[i];
    if (in_contact(i) && in_contact(i + 1)) {
      const auto [alpha, fd] = stage_params(km[i]);
      for (int k = 0; k < nu; ++k) {
        if (model == ForceModel::transmission) {
          const contact::ForceState next = contact::cdds_step({f[i][k], fdot[i][k]}, alpha, fd * n[k], h);
          f[i + 1][k] = next.f;
          fdot[i + 1][k] = next.fdot;
        } else {
          f[i + 1][k] = fd * n[k];
        }
      }
    }
    const Vec impulse = in_contact(i) ? Vec(h * (f[i] + f[i + 1]) / 2.0) : Vec::Zero(nu);
    ydot[i + 1] = ydot[i] + impulse / M;
    y[i + 1] = y[i] + h * (ydot[i] + ydot[i + 1]) / 2.0;
  }
  if (model == ForceModel::transmission)
    for (int i = first; i < N; ++i)
      if (in_contact(i)) {
        const auto [alpha, fd] = stage_params(km[i]);
        fddot[i] = alpha * alpha * (fd * n - f[i]) - 2.0 * alpha * fdot[i];
      }

  // End-effector: on the object in contact, a straight approach before.
  const Vec c_touch = s.contact_point_world(y[first]);
  Vec c_start = task.ee_start ? *task.ee_start : Vec(c_touch - kGuessStandoff * n);
  c_start = c_start.cwiseMax(s.workspace.lower).cwiseMin(s.workspace.upper);
  double t = 0.0;
  std::vector<double> times(N);
  for (int i = 0; i < N; ++i) {
    times[i] = t;
    t += dt[i];
  }
  const double t_first = times[first];
  for (int i = 0; i < N; ++i) {
    Vec c, cdot, cddot = Vec::Zero(nu);
    if (in_contact(i)) {
      c = s.contact_point_world(y[i]);
      cdot = ydot[i];
      cddot = f[i] / M;
    } else if (i < first) {
      const double u = t_first > 0.0 ? times[i] / t_first : 1.0;
      c = (1.0 - u) * c_start + u * c_touch;
      cdot = t_first > 0.0 ? Vec((c_touch - c_start) / t_first) : Vec::Zero(nu);
    } else {
      c = s.contact_point_world(y[i]) - kGuessStandoff * n;
      cdot = ydot[i];
    }
    for (int k = 0; k < nu; ++k) {
      x[L.index(i, Quantity::y, k)] = y[i][k];
      x[L.index(i, Quantity::ydot, k)] = ydot[i][k];
      x[L.index(i, Quantity::c, k)] = c[k];
      x[L.index(i, Quantity::cdot, k)] = cdot[k];
      x[L.index(i, Quantity::cddot, k)] = std::clamp(cddot[k], -task.ee_accel_max, task.ee_accel_max);
      x[L.index(i, Quantity::f, k)] = f[i][k];
      x[L.index(i, Quantity::fdot, k)] = fdot[i][k];
      x[L.index(i, Quantity::fddot, k)] = fddot[i][k];
    }
    x[L.index(i, Quantity::dt)] = dt[i];
  }
  for (int l = 0; l < L.stage_count(); ++l) {
    const auto [alpha, fd] = stage_params(L.stage_modes()[l]);
    x[L.alpha_index(l)] = alpha;
    x[L.fd_index(l)] = fd;
  }
  return x;
}

Trajectory extract_trajectory(const TranscriptionLayout& L, const ModeSequence& z, const nlp::Vector& x) {
  Trajectory traj;
  traj.dim = L.dim();
  traj.modes = z;
  const int nu = L.dim();
  auto vec = [&](int i, Quantity q) {
    Vec v(nu);
    for (int k = 0; k < nu; ++k) v[k] = x[L.index(i, q, k)];
    return v;
  };
  double t = 0.0;
  for (int i = 0; i < L.knots(); ++i) {
    KnotState k;
    k.y = vec(i, Quantity::y);
    k.ydot = vec(i, Quantity::ydot);
    k.c = vec(i, Quantity::c);
    k.cdot = vec(i, Quantity::cdot);
    k.cddot = vec(i, Quantity::cddot);
    k.f = vec(i, Quantity::f);
    k.fdot = vec(i, Quantity::fdot);
    k.fddot = vec(i, Quantity::fddot);
    k.dt = x[L.index(i, Quantity::dt)];
    k.t = t;
    k.mode = L.knot_modes()[i];
    t += k.dt;
    traj.knots.push_back(std::move(k));
  }
  for (int l = 0; l < L.stage_count(); ++l) {
    const int m = L.stage_modes()[l];
    traj.stages.push_back({m, z.modes[m].stage, x[L.alpha_index(l)], x[L.fd_index(l)]});
  }
  return traj;
}

ImpedanceSchedule impedance_schedule(const Trajectory& traj, const Scenario& s) {
  ImpedanceSchedule sched;
  const std::vector<int> starts = traj.modes.mode_starts();
  const double mv = s.sim.virtual_mass.value_or(s.object.mass);
  for (std::size_t j = 0; j < starts.size(); ++j) {
    if (starts[j] >= static_cast<int>(traj.knots.size())) break;
    ImpedanceSegment seg;
    seg.t = traj.knots[starts[j]].t;
    seg.mode = static_cast<int>(j);
    double alpha = s.task.alpha_max;
    if (traj.modes.modes[j].in_contact()) {
      seg.M = s.object.mass;
      if (const StageParams* st = traj.stage_for_mode(static_cast<int>(j))) alpha = st->alpha;
    } else {
      seg.M = mv;
    }
    const contact::Gains gains = contact::alpha_to_gains(alpha, seg.M);
    seg.K = gains.K;
    seg.B = gains.B;
    sched.segments.push_back(seg);
  }
  return sched;
}

namespace {

std::string violation_report(const nlp::NlpProblem& p, const nlp::Vector& x) {
  std::vector<std::pair<double, std::string>> worst;
  std::vector<double> out;
  auto scan = [&](const std::vector<nlp::Block>& blocks, bool equality) {
    for (const auto& b : blocks) {
      out.assign(b.rows, 0.0);
      nlp::evaluate_block(b, x, out);
      double v = 0.0;
      for (double r : out) v = std::max(v, equality ? std::abs(r) : std::max(0.0, -r));
      if (v > 0.0) worst.emplace_back(v, b.name);
    }
  };
  scan(p.equalities, true);
  scan(p.inequalities, false);
  std::sort(worst.begin(), worst.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::ostringstream os;
  for (std::size_t k = 0; k < std::min<std::size_t>(5, worst.size()); ++k)
    os << (k ? "; " : "") << worst[k].second << " violated by " << worst[k].first;
  return os.str();
}

PlanResult solve_plan(const Scenario& s, const ModeSequence& z, ForceModel model) {
  const Transcription tr = transcribe(s, z, model);
  const nlp::Vector x0 = tr.layout.to_solver(motion_seed(s, z, model));
  PlanResult r;
  r.solution = nlp::solve(tr.problem, x0, s.solver);
  r.trajectory = extract_trajectory(tr.layout, z, tr.layout.to_physical(r.solution.x_star));
  r.schedule = impedance_schedule(r.trajectory, s);
  if (!r.solution.converged()) {
    std::ostringstream os;
    os << "solver " << nlp::to_string(r.solution.status) << " (max violation " << r.solution.max_violation
       << ", stationarity " << r.solution.stationarity << ")";
    const std::string rows = violation_report(tr.problem, r.solution.x_star);
    if (!rows.empty()) os << ": " << rows;
    r.diagnostics = os.str();
  }
  return r;
}

int sweep_threads(std::size_t jobs) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("IMPACTPLAN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, std::min(n, static_cast<int>(jobs)));
}

}  // namespace

PlanResult plan(const Scenario& s, const ModeSequence& z) { return solve_plan(s, z, ForceModel::transmission); }

PlanResult plan_impact_agnostic(const Scenario& s, const ModeSequence& z) {
  return solve_plan(s, z, ForceModel::agnostic);
}

Scenario sweep_scenario(const Scenario& s, double workspace, double goal) {
  Scenario row = s;
  const double center = 0.5 * (s.workspace.lower[0] + s.workspace.upper[0]);
  row.workspace.lower[0] = center - workspace;
  row.workspace.upper[0] = center + workspace;
  Vec yN = s.task.yN.value_or(s.task.y0);
  yN[0] = goal;
  row.task.yN = yN;
  return row;
}

SweepResult sweep(const Scenario& s, const ModeSequence& z, const std::vector<double>& workspaces,
                  const std::vector<double>& goals) {
  if (workspaces.empty() || goals.empty()) throw std::invalid_argument("sweep needs workspaces and goals");
  SweepResult result;
  for (double w : workspaces)
    for (double g : goals) {
      SweepRow row;
      row.workspace = w;
      row.goal = g;
      result.rows.push_back(row);
    }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < result.rows.size(); k = next++) {
      SweepRow& row = result.rows[k];
      try {
        const PlanResult r = plan(sweep_scenario(s, row.workspace, row.goal), z);
        row.status = nlp::to_string(r.solution.status);
        row.trajectory = r.trajectory;
        row.peak_force = r.trajectory.peak_force();
        row.contact_duration = r.trajectory.contact_duration();
        for (const auto& st : r.trajectory.stages) (st.stage < 0 ? row.alpha_neg : row.alpha_pos) = st.alpha;
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
    }
  };
  const int n_threads = sweep_threads(result.rows.size());
  std::vector<std::thread> pool;
  for (int k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return result;
}

}  // namespace impactplan::planner
