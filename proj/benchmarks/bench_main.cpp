#include <benchmark/benchmark.h>

#include <cmath>

#include "impactplan/contact.hpp"
#include "impactplan/nlp/problem.hpp"
#include "impactplan/planner.hpp"
#include "impactplan/sim.hpp"

using namespace impactplan;

namespace {

// The halting scenario, built in code so the benchmarks do not need the CLI reader.
struct Halting {
  Scenario s;
  ModeSequence z{{Mode::free_motion(), Mode::deformation()}, {10, 10}};

  Halting() {
    std::vector<Vec2> pts;
    for (int k = 0; k < 16; ++k)
      pts.emplace_back(0.2 * std::cos(2 * M_PI * k / 16), 0.2 * std::sin(2 * M_PI * k / 16));
    s.object.mass = 20;
    s.object.surface = geometry::SurfaceSpline::from_points(pts);
    s.object.contact_point = Vec2(0.2, 0);
    s.object.contact_normal = Vec::Constant(1, -1.0);
    s.workspace.lower = Vec::Constant(1, 0.5);
    s.workspace.upper = Vec::Constant(1, 1.0);
    s.task.y0 = Vec::Constant(1, 0.0);
    s.task.ydot0 = Vec::Constant(1, 0.65);
    s.task.ydotN = Vec::Constant(1, 0.0);
  }
};

const Halting& halting() {
  static const Halting h;
  return h;
}

void BM_CddsStep(benchmark::State& state) {
  contact::ForceState st;
  for (auto _ : state) {
    st = contact::cdds_step(st, 8.0, 10.0, 1e-3);
    benchmark::DoNotOptimize(st);
  }
}
BENCHMARK(BM_CddsStep);

void BM_ConstraintJacobians(benchmark::State& state) {
  const auto& h = halting();
  const planner::Transcription tr = planner::transcribe(h.s, h.z);
  const nlp::Vector x = tr.layout.to_solver(planner::motion_seed(h.s, h.z));
  for (auto _ : state) {
    benchmark::DoNotOptimize(nlp::equality_jacobian(tr.problem, x));
    benchmark::DoNotOptimize(nlp::inequality_jacobian(tr.problem, x));
    benchmark::DoNotOptimize(nlp::objective_gradient(tr.problem, x));
  }
}
BENCHMARK(BM_ConstraintJacobians)->Unit(benchmark::kMicrosecond);

void BM_HaltingPlan(benchmark::State& state) {
  const auto& h = halting();
  for (auto _ : state) benchmark::DoNotOptimize(planner::plan(h.s, h.z));
}
BENCHMARK(BM_HaltingPlan)->Unit(benchmark::kMillisecond);

void BM_AwareRollout(benchmark::State& state) {
  const auto& h = halting();
  const planner::PlanResult r = planner::plan(h.s, h.z);
  for (auto _ : state) benchmark::DoNotOptimize(sim::simulate_rollout(r.trajectory, r.schedule, h.s));
}
BENCHMARK(BM_AwareRollout)->Unit(benchmark::kMillisecond);

void BM_ComplianceRollout(benchmark::State& state) {
  const auto& h = halting();
  for (auto _ : state) benchmark::DoNotOptimize(sim::simulate_compliance_only(13600.0, h.s));
}
BENCHMARK(BM_ComplianceRollout)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
