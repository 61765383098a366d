#include <cmath>
#include <set>

#include "checks.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "impactplan/contact.hpp"
#include "impactplan/planner.hpp"

using namespace impactplan;
using namespace impactplan::planner;
using doctest::Approx;

namespace {

const PlanResult& halting_plan() {
  static const PlanResult r = [] {
    const auto f = fixtures::scenario("halting");
    return plan(f.scenario, f.modes);
  }();
  return r;
}

const PlanResult& halting_agnostic() {
  static const PlanResult r = [] {
    const auto f = fixtures::scenario("halting");
    return plan_impact_agnostic(f.scenario, f.modes);
  }();
  return r;
}

Scenario at_rest() {
  Scenario s = fixtures::scenario("halting").scenario;
  s.task.ydot0 = Vec::Zero(1);
  s.task.yN = s.task.y0;
  s.task.ydotN = Vec::Zero(1);
  return s;
}

}  // namespace

TEST_SUITE("planner") {
  TEST_CASE("layout variable counts") {
    const ModeSequence free3{{Mode::free_motion()}, {3}};
    const TranscriptionLayout a(1, free3, ForceModel::transmission, 10.0);
    CHECK(a.knot_variable_count() == 27);
    CHECK(a.stage_count() == 0);
    CHECK(a.n_vars() == 27);
    const ModeSequence push{{Mode::free_motion(), Mode::deformation(), Mode::restitution()}, {10, 10, 10}};
    const TranscriptionLayout b(1, push, ForceModel::transmission, 10.0);
    CHECK(b.knot_variable_count() == 270);
    CHECK(b.n_vars() == 274);
    const TranscriptionLayout c(2, push, ForceModel::transmission, 10.0);
    CHECK(c.n_vars() == 30 * (5 * 2 + 3 * 2 + 1) + 4);
  }

  TEST_CASE("layout offsets are disjoint and dense") {
    const ModeSequence push{{Mode::free_motion(), Mode::deformation(), Mode::restitution()}, {4, 3, 3}};
    for (int dim : {1, 2}) {
      const TranscriptionLayout L(dim, push, ForceModel::transmission, 10.0);
      std::set<int> seen;
      for (int i = 0; i < L.knots(); ++i)
        for (int q = 0; q <= static_cast<int>(Quantity::dt); ++q)
          for (int k = 0; k < (q == static_cast<int>(Quantity::dt) ? 1 : dim); ++k)
            CHECK(seen.insert(L.index(i, static_cast<Quantity>(q), k)).second);
      for (int st = 0; st < L.stage_count(); ++st) {
        CHECK(seen.insert(L.alpha_index(st)).second);
        CHECK(seen.insert(L.fd_index(st)).second);
      }
      CHECK(static_cast<int>(seen.size()) == L.n_vars());
      CHECK(*seen.begin() == 0);
      CHECK(*seen.rbegin() == L.n_vars() - 1);
    }
  }

  TEST_CASE("free-motion knots carry a zero-force equality") {
    const auto f = fixtures::scenario("halting");
    const Transcription tr = transcribe(f.scenario, f.modes);
    int free_force = 0;
    for (const auto& c : tr.layout.constraints())
      if (c.name == "free_force") {
        CHECK(c.kind == "eq");
        ++free_force;
      }
    CHECK(free_force == 10);
  }

  TEST_CASE("transcribe rejects bad input") {
    const auto f = fixtures::scenario("halting");
    const ModeSequence bad{{Mode::free_motion(), Mode::restitution(), Mode::deformation()}, {3, 3, 3}};
    CHECK_THROWS_AS(transcribe(f.scenario, bad), std::invalid_argument);
    Scenario s = f.scenario;
    s.object.contact_normal = Vec::Constant(2, 0.0);
    CHECK_THROWS_AS(transcribe(s, f.modes), std::invalid_argument);
  }

  TEST_CASE("friction cone examples") {
    const Vec n = Vec2(0, 1);
    auto c = friction_cone_check(Vec2(0, 10), n, 0.5);
    CHECK(c.inside);
    CHECK(c.weights[0] == Approx(5));
    CHECK(c.weights[1] == Approx(5));
    c = friction_cone_check(Vec2(6, 10), n, 0.5);
    CHECK_FALSE(c.inside);
    CHECK(c.weights[0] == Approx(11));
    CHECK(c.weights[1] == Approx(-1));
    c = friction_cone_check(Vec2(0, 0), n, 0.5);
    CHECK(c.inside);
    CHECK(c.weights.isZero());
    CHECK_THROWS(friction_cone_check(Vec2(1, 0), Vec2(0, 0), 0.5));
  }

  TEST_CASE("initial guess rules") {
    const auto f = fixtures::scenario("halting");
    const Transcription tr = transcribe(f.scenario, f.modes);
    const nlp::Vector g = initial_guess(f.scenario, f.modes);
    const auto& L = tr.layout;
    CHECK(g[L.index(0, Quantity::ydot)] == 0.65);
    for (int i = 0; i < L.knots(); ++i) {
      CHECK(g[L.index(i, Quantity::dt)] == Approx(0.5 * (0.005 + 0.2)));
      CHECK(g[L.index(i, Quantity::f)] == 0.0);
      CHECK(g[L.index(i, Quantity::fdot)] == 0.0);
      CHECK(g[L.index(i, Quantity::fddot)] == 0.0);
    }
    CHECK(g[L.alpha_index(0)] == Approx(std::sqrt(0.5 * 20.0)));
    CHECK(g == initial_guess(f.scenario, f.modes));
  }

  TEST_CASE("planner derivatives match finite differences") {
    for (const char* name : {"halting", "halt_push"}) {
      const auto f = fixtures::scenario(name);
      for (auto model : {ForceModel::transmission, ForceModel::agnostic}) {
        const Transcription tr = transcribe(f.scenario, f.modes, model);
        const nlp::Vector c = tr.layout.to_solver(motion_seed(f.scenario, f.modes, model));
        const auto rep = checks::check_gradients(tr.problem, c, 5, 17);
        INFO(name, " ", rep.block);
        CHECK(rep.worst <= 1e-5);
      }
    }
  }

  TEST_CASE("halting plan") {
    const auto f = fixtures::scenario("halting");
    const PlanResult& r = halting_plan();
    REQUIRE(r.converged());
    const Trajectory& t = r.trajectory;
    CHECK(std::abs(t.knots.back().ydot[0]) <= 1e-3);
    CHECK(t.contact_duration() >= 0.5);
    CHECK(t.contact_duration() <= 1.5);
    CHECK(trajectory_violations(t, f.scenario).empty());
    CHECK(recheck_constraints(f.scenario, t, ForceModel::transmission).max_abs <= 1e-4);
    for (int i = 0; i < static_cast<int>(t.knots.size()); ++i)
      CHECK_FALSE((t.mode_at(i).contact == 0 && t.mode_at(i).stage != 0));
  }

  TEST_CASE("contact forces follow the force model closed form") {
    const auto f = fixtures::scenario("halting");
    const Trajectory& t = halting_plan().trajectory;
    const Vec n = f.scenario.normal();
    for (const auto& st : t.stages) {
      const int first = f.modes.mode_starts()[st.mode];
      const double t0 = t.knots[first].t;
      for (int i = first; i < static_cast<int>(t.knots.size()) && t.knots[i].mode == st.mode; ++i) {
        const double ref = contact::cdds_closed_form(st.alpha, st.f_desired, t.knots[i].t - t0);
        CHECK(std::abs(t.normal_force(i, n) - ref) <= 1e-3 * st.f_desired);
      }
    }
  }

  TEST_CASE("momentum balance, friction cone and schedule") {
    const auto f = fixtures::scenario("halting");
    const double M = f.scenario.object.mass;
    for (const PlanResult* r : {&halting_plan(), &halting_agnostic()}) {
      REQUIRE(r->converged());
      const Trajectory& t = r->trajectory;
      int a = -1, b = -1;
      for (int i = 0; i < static_cast<int>(t.knots.size()); ++i)
        if (t.mode_at(i).in_contact()) {
          if (a < 0) a = i;
          b = i;
        }
      REQUIRE(a >= 0);
      double impulse = 0.0;
      for (int i = a; i < b; ++i) impulse += 0.5 * (t.knots[i].f[0] + t.knots[i + 1].f[0]) * t.knots[i].dt;
      const double dp = M * (t.knots[b].ydot[0] - t.knots[a].ydot[0]);
      CHECK(std::abs(dp - impulse) <= 1e-3 * std::abs(dp));
      for (int i = a; i <= b; ++i)
        CHECK(friction_cone_check(t.knots[i].f, f.scenario.normal(), f.scenario.task.friction_mu).inside);
      for (const auto& seg : r->schedule.segments) {
        CHECK(seg.K > 0.0);
        CHECK(seg.B == Approx(2.0 * std::sqrt(seg.M * seg.K)).epsilon(1e-9));
      }
    }
    const auto& sch = halting_plan().schedule;
    REQUIRE(sch.segments.size() == 2);
    CHECK(sch.segments[1].K == Approx(contact::alpha_to_gains(halting_plan().trajectory.stages[0].alpha, M).K));
  }

  TEST_CASE("impact-agnostic plan is a short burst") {
    const Trajectory& agn = halting_agnostic().trajectory;
    CHECK(agn.stages.empty());
    CHECK(agn.contact_duration() <= 0.3);
    CHECK(agn.peak_force() >= 3.0 * halting_plan().trajectory.peak_force());
  }

  TEST_CASE("nothing to do") {
    const Scenario s = at_rest();
    const ModeSequence z{{Mode::free_motion()}, {5}};
    for (const PlanResult& r : {plan(s, z), plan_impact_agnostic(s, z)}) {
      REQUIRE(r.converged());
      const auto& K = r.trajectory.knots;
      double sum_dt = 0.0;
      for (std::size_t i = 0; i < K.size(); ++i) {
        CHECK(K[i].f.norm() <= 1e-6);
        if (i + 1 < K.size()) sum_dt += K[i].dt;
      }
      CHECK(sum_dt == Approx(4 * s.task.dt_min).epsilon(1e-3));
      CHECK(r.solution.objective_value == Approx(s.weights.time * sum_dt).epsilon(1e-3));
    }
  }

  TEST_CASE("make-contact plan jumps without violating acceleration bounds") {
    const auto f = fixtures::scenario("make_contact");
    const PlanResult r = plan(f.scenario, f.modes);
    REQUIRE(r.converged());
    const Trajectory& t = r.trajectory;
    const int i = f.modes.mode_starts()[1] - 1;
    const double jump = std::abs(t.knots[i + 1].cdot[0] - t.knots[i].cdot[0]);
    CHECK(jump > f.scenario.task.ee_accel_max * f.scenario.task.dt_max);
    for (const auto& k : t.knots) CHECK(std::abs(k.cddot[0]) <= f.scenario.task.ee_accel_max + 1e-6);
    CHECK(recheck_constraints(f.scenario, t, ForceModel::transmission).max_abs <= 1e-4);
  }

  TEST_CASE("halt-push saturates the restitution stiffness") {
    const auto f = fixtures::scenario("halt_push");
    const SweepResult res = sweep(f.scenario, f.modes, {0.5}, {0.8});
    REQUIRE(res.rows.size() == 1);
    CHECK(res.rows[0].status == "converged");
    CHECK(res.rows[0].alpha_pos == Approx(20.0).epsilon(1e-4));
    CHECK(res.rows[0].alpha_neg < res.rows[0].alpha_pos);
    CHECK_THROWS(sweep(f.scenario, f.modes, {}, {0.8}));
  }

  TEST_CASE("deterministic") {
    const auto f = fixtures::scenario("halting");
    const PlanResult r = plan(f.scenario, f.modes);
    CHECK(r.solution.x_star == halting_plan().solution.x_star);
  }
}
