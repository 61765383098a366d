// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "fixtures.hpp"
#include "impactplan/cli/csv.hpp"
#include "impactplan/contact.hpp"
#include "impactplan/nlp/solver.hpp"
#include "impactplan/planner.hpp"
#include "impactplan/sim.hpp"

using namespace impactplan;
using namespace impactplan::planner;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double budget;  // s
  std::function<void(Outcome&)> run;
};

// Shared between criteria; each is built inside the first criterion that needs it.
struct Shared {
  cli::ScenarioFile halting;
  PlanResult aware, agnostic;
  sim::SimTrace aware_roll, agnostic_roll, compliance;
  cli::ScenarioFile halt_push;
  SweepResult ws_sweep, goal_sweep;
} S;

struct PlanView {
  const Trajectory* traj;
  const Scenario* scenario;
};

std::vector<PlanView> converged_plans() {
  std::vector<PlanView> out{{&S.aware.trajectory, &S.halting.scenario}, {&S.agnostic.trajectory, &S.halting.scenario}};
  for (const auto* res : {&S.ws_sweep, &S.goal_sweep})
    for (const auto& r : res->rows) out.push_back({&r.trajectory, &S.halt_push.scenario});
  return out;
}

nlp::NlpProblem active_bound() {
  nlp::NlpProblem p;
  p.n_vars = 1;
  p.lower = nlp::Vector::Constant(1, -10);
  p.upper = nlp::Vector::Constant(1, 10);
  p.objective.push_back(nlp::make_block("x2", {0}, 1, [](auto x, auto out) { out[0] = x[0] * x[0]; }));
  p.inequalities.push_back(nlp::make_block("x>=1", {0}, 1, [](auto x, auto out) { out[0] = x[0] - 1.0; }));
  return p;
}

nlp::NlpProblem equality_qp() {
  nlp::NlpProblem p;
  p.n_vars = 2;
  p.lower = nlp::Vector::Constant(2, -10);
  p.upper = nlp::Vector::Constant(2, 10);
  p.objective.push_back(
      nlp::make_block("r2", {0, 1}, 1, [](auto x, auto out) { out[0] = x[0] * x[0] + x[1] * x[1]; }));
  p.equalities.push_back(nlp::make_block("sum", {0, 1}, 1, [](auto x, auto out) { out[0] = x[0] + x[1] - 2.0; }));
  return p;
}

nlp::NlpProblem rosenbrock() {
  nlp::NlpProblem p;
  p.n_vars = 2;
  p.lower = nlp::Vector::Constant(2, -1e3);
  p.upper = nlp::Vector::Constant(2, 1e3);
  p.objective.push_back(nlp::make_block("rosen", {0, 1}, 1, [](auto x, auto out) {
    out[0] = (1.0 - x[0]) * (1.0 - x[0]) + 100.0 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]);
  }));
  return p;
}

void cdds_oracle(Outcome& o) {
  double worst = 0.0, overshoot = 0.0, settle = 0.0, ratio = 0.0;
  const double fd = 10.0, dt = 1e-3;
  for (double alpha : {1.0, 5.0, 10.0, 20.0}) {
    contact::ForceState st;
    for (int k = 1; k <= 2000; ++k) {
      st = contact::cdds_step(st, alpha, fd, dt);
      const double ref = contact::cdds_closed_form(alpha, fd, k * dt);
      worst = std::max(worst, std::abs(st.f - ref) / std::max(std::abs(ref), 1e-12));
      overshoot = std::max(overshoot, st.f - fd);
    }
    ratio = contact::cdds_closed_form(alpha, fd, 3.0 / alpha) / fd;
    settle = std::max(settle, std::abs(ratio - (1.0 - 4.0 * std::exp(-3.0))));
  }
  o.detail << "max rel err " << worst << ", overshoot " << overshoot << ", f(3/a)/fd " << ratio
           << " (|. - (1 - 4/e^3)| " << settle << ")";
  o.require(worst <= 1e-9, "step vs closed form");
  o.require(overshoot <= 0.0, "overshoot");
  o.require(settle <= 1e-6, "f(3/alpha)");
  o.require(std::round(ratio * 1e4) == 8009.0, "f(3/alpha) = 0.8009 fd at 4 decimals");
}

void gradient_suite(Outcome& o) {
  double worst = 0.0;
  long comparisons = 0;
  std::string where;
  for (const char* name : {"halting", "halt_push", "make_contact"}) {
    const auto f = fixtures::scenario(name);
    for (auto model : {ForceModel::transmission, ForceModel::agnostic}) {
      const Transcription tr = transcribe(f.scenario, f.modes, model);
      const nlp::Vector c = tr.layout.to_solver(motion_seed(f.scenario, f.modes, model));
      const auto rep = checks::check_gradients(tr.problem, c, 100, 2026);
      comparisons += rep.comparisons;
      if (rep.worst >= worst) {
        worst = rep.worst;
        where = std::string(name) + "/" + rep.block;
      }
    }
  }
  o.detail << comparisons << " comparisons, worst " << worst << " (" << where << ")";
  o.require(worst <= 1e-5, "gradient mismatch");
}

void solver_oracle(Outcome& o) {
  const nlp::Solution a = nlp::solve(active_bound(), nlp::Vector::Constant(1, 5.0));
  const nlp::Solution q = nlp::solve(equality_qp(), nlp::Vector::Zero(2));
  nlp::Vector x0(2);
  x0 << -1.2, 1.0;
  nlp::SolverOptions opt;
  opt.max_inner = 2000;
  const nlp::Solution r = nlp::solve(rosenbrock(), x0, opt);
  const double ea = std::abs(a.x_star[0] - 1.0);
  const double eq = (q.x_star - nlp::Vector::Ones(2)).cwiseAbs().maxCoeff();
  const double er = (r.x_star - nlp::Vector::Ones(2)).cwiseAbs().maxCoeff();
  o.detail << "errors " << ea << ", " << eq << ", " << er;
  o.require(a.converged() && q.converged() && r.converged(), "converged");
  o.require(std::max({ea, eq, er}) <= 1e-5, "optimum");
}

void halting(Outcome& o) {
  S.halting = fixtures::scenario("halting");
  S.aware = plan(S.halting.scenario, S.halting.modes);
  const Trajectory& t = S.aware.trajectory;
  const double v = t.knots.back().ydot.norm();
  const double rc = recheck_constraints(S.halting.scenario, t, ForceModel::transmission).max_abs;
  o.detail << nlp::to_string(S.aware.solution.status) << ", final speed " << v << ", contact " << t.contact_duration()
           << " s, recheck " << rc;
  o.require(S.aware.converged(), "converged");
  o.require(v <= 1e-3, "final speed");
  o.require(t.contact_duration() >= 0.5 && t.contact_duration() <= 1.5, "contact duration");
  o.require(rc <= 1e-4, "recheck");
}

void ablation(Outcome& o) {
  S.agnostic = plan_impact_agnostic(S.halting.scenario, S.halting.modes);
  Scenario s = S.halting.scenario;
  s.sim.horizon = std::max(S.aware.trajectory.duration(), S.agnostic.trajectory.duration());
  S.aware_roll = sim::simulate_rollout(S.aware.trajectory, S.aware.schedule, s);
  S.agnostic_roll = sim::simulate_rollout(S.agnostic.trajectory, S.agnostic.schedule, s);
  const double window = S.agnostic.trajectory.contact_duration();
  const double ratio = S.agnostic.trajectory.peak_force() / S.aware.trajectory.peak_force();
  const auto oa = sim::detect_contact_outcome(S.aware_roll);
  const auto og = sim::detect_contact_outcome(S.agnostic_roll);
  o.detail << "agnostic window " << window << " s, peak ratio " << ratio << ", rollouts " << sim::to_string(oa)
           << " / " << sim::to_string(og);
  o.require(S.agnostic.converged(), "agnostic converged");
  o.require(window <= 0.3, "window");
  o.require(ratio >= 3.0, "peak ratio");
  o.require(oa == sim::ContactOutcome::maintained, "aware maintained");
  o.require(og == sim::ContactOutcome::rebound, "agnostic rebound");
}

void compliance(Outcome& o) {
  S.compliance = sim::simulate_compliance_only(13600.0, S.halting.scenario);
  const double peak = S.compliance.peak_force();
  const double ratio = peak / S.aware_roll.peak_force();
  o.detail << "peak " << peak << " N, ratio to aware rollout " << ratio;
  o.require(peak >= 600.0 && peak <= 760.0, "peak range");
  o.require(ratio >= 5.0, "ratio");
}

bool within_factor_two(double v, double ref) { return v >= 0.5 * ref && v <= 2.0 * ref; }

void sweep_trends(Outcome& o) {
  S.halt_push = fixtures::scenario("halt_push");
  const auto& f = S.halt_push;
  const std::vector<double> ws{0.10, 0.12, 0.20, 0.50};
  S.ws_sweep = sweep(f.scenario, f.modes, ws, {0.8});
  S.goal_sweep = sweep(f.scenario, f.modes, {0.5}, {0.6, 0.4});
  const auto& W = S.ws_sweep.rows;
  const auto& G = S.goal_sweep.rows;
  o.detail << "alpha_neg";
  for (const auto& r : W) o.detail << " " << r.alpha_neg;
  o.detail << ", peak over goals " << W.back().peak_force;
  for (const auto& r : G) o.detail << " " << r.peak_force;
  o.detail << ", alpha_neg at goal 0.4 " << G.back().alpha_neg;
  bool converged = true, saturated = true, monotone = true;
  for (const auto* rows : {&W, &G})
    for (const auto& r : *rows) {
      converged = converged && r.status == "converged";
      saturated = saturated && std::abs(r.alpha_pos - 20.0) <= 1e-3;
    }
  for (std::size_t k = 1; k < W.size(); ++k) monotone = monotone && W[k].alpha_neg <= W[k - 1].alpha_neg;
  o.require(converged, "all rows converged");
  o.require(monotone, "alpha_neg non-increasing");
  o.require(saturated, "alpha_pos = 20");
  o.require(G[0].peak_force < W.back().peak_force && G[1].peak_force < G[0].peak_force, "peak decreasing");
  o.require(within_factor_two(W.front().alpha_neg, 7.72) && within_factor_two(W.back().alpha_neg, 2.23) &&
                within_factor_two(G.back().alpha_neg, 1.75),
            "reference alphas");
}

void bookkeeping(Outcome& o) {
  double momentum = 0.0;
  bool cone = true;
  for (const auto& [t, s] : converged_plans()) {
    int a = -1, b = -1;
    for (int i = 0; i < static_cast<int>(t->knots.size()); ++i)
      if (t->mode_at(i).in_contact()) {
        if (a < 0) a = i;
        b = i;
        cone = cone && friction_cone_check(t->knots[i].f, s->normal(), s->task.friction_mu).inside;
      }
    if (a < 0) continue;
    Vec impulse = Vec::Zero(t->dim);
    for (int i = a; i < b; ++i) impulse += 0.5 * (t->knots[i].f + t->knots[i + 1].f) * t->knots[i].dt;
    const Vec dp = s->object.mass * (t->knots[b].ydot - t->knots[a].ydot);
    if (dp.norm() > 0.0) momentum = std::max(momentum, (dp - impulse).norm() / dp.norm());
  }
  double energy = 0.0;
  sim::SimTrace soft = sim::simulate_compliance_only(2000.0, S.halting.scenario);
  for (const sim::SimTrace* tr : {&S.compliance, &soft}) energy = std::max(energy, sim::energy_balance(*tr).relative_error);
  bool unilateral = true;
  for (const auto* tr : {&S.compliance, &S.aware_roll, &S.agnostic_roll})
    for (const auto& smp : tr->samples) unilateral = unilateral && smp.force >= 0.0 && (smp.gap <= 0.0 || smp.force == 0.0);
  o.detail << "momentum " << momentum << ", energy " << energy << ", cone " << (cone ? "ok" : "violated")
           << ", unilateral " << (unilateral ? "ok" : "violated");
  o.require(momentum <= 1e-3, "momentum");
  o.require(energy <= 0.02, "energy");
  o.require(cone, "friction cone");
  o.require(unilateral, "unilaterality");
}

void jump_map(Outcome& o) {
  const auto f = fixtures::scenario("make_contact");
  const PlanResult r = plan(f.scenario, f.modes);
  const Trajectory& t = r.trajectory;
  const int i = f.modes.mode_starts()[1] - 1;
  const double amax = f.scenario.task.ee_accel_max;
  const double jump = (t.knots[i + 1].cdot - t.knots[i].cdot).cwiseAbs().maxCoeff();
  double excess = 0.0;
  for (const auto& k : t.knots) excess = std::max(excess, k.cddot.cwiseAbs().maxCoeff() - amax);
  o.detail << nlp::to_string(r.solution.status) << ", jump " << jump << " m/s vs bound " << amax * t.knots[i].dt
           << ", accel excess " << std::max(excess, 0.0);
  o.require(r.converged(), "converged");
  o.require(jump > amax * t.knots[i].dt && jump > amax * f.scenario.task.dt_max, "jump exceeds integrated bound");
  o.require(excess <= 1e-6 * amax, "acceleration bound");
}

void friction_fit(Outcome& o) {
  std::vector<sim::PositionSample> clean;
  for (int k = 0; k < 26; ++k) {
    const double t = 0.02 * k;
    clean.push_back({t, 0.1 + 0.65 * t - 0.5 * 0.05 * t * t});
  }
  const sim::FrictionFit a = sim::fit_rolling_friction(clean);
  const double err = std::max({std::abs(a.p0 - 0.1), std::abs(a.v0 - 0.65), std::abs(a.decel - 0.05)});
  const cli::CsvTable noisy = cli::read_csv(fixtures::path("tests/fixtures/rolling_noisy.csv"));
  std::vector<sim::PositionSample> samples;
  for (const auto& row : noisy.rows) samples.push_back({row[0], row[1]});
  const sim::FrictionFit b = sim::fit_rolling_friction(samples);
  o.detail << "noiseless coefficient error " << err << ", noisy r^2 " << b.r_squared;
  o.require(err <= 1e-8, "noiseless recovery");
  o.require(std::isfinite(b.r_squared), "noisy r^2 finite");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "force model oracle", 1.0, cdds_oracle},
      {2, "gradient suite", 30.0, gradient_suite},
      {3, "solver oracle", 5.0, solver_oracle},
      {4, "halting plan", 10.0, halting},
      {5, "ablation", 30.0, ablation},
      {6, "compliance baseline", 10.0, compliance},
      {7, "sweep trends", 120.0, sweep_trends},
      {8, "physical bookkeeping", 10.0, bookkeeping},
      {9, "jump map", 30.0, jump_map},
      {10, "friction fit", 1.0, friction_fit},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget) {
      o.pass = false;
      o.detail << " [over budget " << c.budget << " s]";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s; %.2f s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
