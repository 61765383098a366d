#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "impactplan/cli/commands.hpp"
#include "impactplan/cli/csv.hpp"
#include "impactplan/cli/scenario_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace impactplan;
using namespace impactplan::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "impactplan_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string halting_text() { return slurp(fixtures::path("scenarios/halting.json")); }

std::string write_text(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

// First diagnostic raised by parse_scenario, or an empty one.
Diagnostic first_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    REQUIRE(!e.diagnostics().empty());
    return e.diagnostics().front();
  }
  return {};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("scenario files parse") {
    const ScenarioFile f = parse_scenario(halting_text());
    CHECK(f.scenario.dim == 1);
    CHECK(f.scenario.object.mass == 20.0);
    CHECK(f.modes.modes.size() == 2);
    CHECK(f.modes.knots_per_mode[0] == 10);
    for (const char* name : {"halt_push", "make_contact"}) CHECK_NOTHROW(fixtures::scenario(name));
  }

  TEST_CASE("scenario diagnostics carry field and line") {
    auto j = nlohmann::json::parse(halting_text());
    j["object"].erase("mass");
    const std::string text = j.dump(2);
    const Diagnostic d = first_error(text);
    CHECK(d.field == "object.mass");
    CHECK(d.line > 0);
    CHECK(d.str().find("object.mass") != std::string::npos);

    auto u = nlohmann::json::parse(halting_text());
    u["task"]["colour"] = 1;
    const Diagnostic du = first_error(u.dump(2));
    CHECK(du.field == "task.colour");
    CHECK(du.line > 0);

    auto m = nlohmann::json::parse(halting_text());
    m["modes"] = nlohmann::json::array();
    CHECK(first_error(m.dump()).field.rfind("modes", 0) == 0);

    CHECK_THROWS_AS(parse_scenario("{ \"object\": "), ScenarioError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ScenarioError);
  }

  TEST_CASE("csv round trip") {
    const fs::path dir = scratch("csv");
    const std::string path = (dir / "t.csv").string();
    {
      CsvWriter w(path, {"time", "force"});
      w.row({0.0, 1.23456789});
      w.row({-1e-9, 2.0});
      CHECK_THROWS_AS(w.row({1.0}), std::invalid_argument);
    }
    const std::string text = slurp(path);
    CHECK(text == "time,force\n0.000000,1.234568\n0.000000,2.000000\n");
    const CsvTable t = read_csv(path);
    CHECK(t.column("force") == 1);
    CHECK(t.column("pos") == -1);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == 1.234568);
    CHECK(format_fixed6(-0.0000004) == "0.000000");
    CHECK(format_fixed6(-0.5) == "-0.500000");
    write_text(dir, "bad.csv", "time,pos\n0,1\n0.1\n");
    CHECK_THROWS_AS(read_csv((dir / "bad.csv").string()), std::runtime_error);
  }

  TEST_CASE("overrides") {
    ScenarioFile f = parse_scenario(halting_text());
    Overrides o;
    o.knots = 6;
    o.weights = std::array<double, 3>{2.0, 0.5, 3.0};
    o.alpha_max = 15.0;
    o.dt = 5e-4;
    apply_overrides(o, f);
    CHECK(f.modes.knots_per_mode[0] == 6);
    CHECK(f.modes.knots_per_mode[1] == 6);
    CHECK(f.scenario.weights.force == 2.0);
    CHECK(f.scenario.weights.accel == 0.5);
    CHECK(f.scenario.weights.time == 3.0);
    CHECK(f.scenario.task.alpha_max == 15.0);
    CHECK(f.scenario.sim.dt == 5e-4);
    Overrides bad;
    bad.dt = 2e-3;
    CHECK_THROWS_AS(apply_overrides(bad, f), ScenarioError);
    Overrides few;
    few.knots = 1;
    CHECK_THROWS_AS(apply_overrides(few, f), ScenarioError);
  }

  TEST_CASE("plan command") {
    const fs::path dir = scratch("plan");
    std::ostringstream out, err;
    CHECK(cmd_plan(fixtures::path("scenarios/halting.json"), dir.string(), {}, out, err) == kExitOk);
    for (const char* f : {"plan.csv", "schedule.csv", "summary.json"}) CHECK(fs::exists(dir / f));
    const CsvTable plan = read_csv((dir / "plan.csv").string());
    CHECK(plan.rows.size() == 20);
    CHECK(plan.column("force") >= 0);
    const std::string text = slurp(dir / "plan.csv");
    CHECK(text.back() == '\n');
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.contains("status"));

    std::ostringstream o2, e2;
    CHECK(cmd_plan("/nonexistent.json", dir.string(), {}, o2, e2) == kExitInput);
    CHECK(!e2.str().empty());
  }

  TEST_CASE("ablate rejects a scenario without modes") {
    const fs::path dir = scratch("ablate");
    auto j = nlohmann::json::parse(halting_text());
    j["modes"] = nlohmann::json::array();
    const std::string p = write_text(dir, "s.json", j.dump(2));
    std::ostringstream out, err;
    CHECK(cmd_ablate(p, dir.string(), {}, 13600, out, err) == kExitInput);
    CHECK(cmd_ablate(fixtures::path("scenarios/halting.json"), dir.string(), {}, -1.0, out, err) == kExitInput);
  }

  TEST_CASE("sweep command writes one row per cell") {
    const fs::path dir = scratch("sweep");
    const std::string csv = (dir / "sweep.csv").string();
    std::ostringstream out, err;
    const int code = cmd_sweep(fixtures::path("scenarios/halt_push.json"), {0.5}, {0.8}, csv, {}, out, err);
    CHECK(code == kExitOk);
    const std::string text = slurp(csv);
    CHECK(text.rfind("workspace,goal,alpha_neg,alpha_pos,peak_force,contact_duration,status\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.find("converged") != std::string::npos);
    CHECK(fs::exists(dir / "sweep_row0.csv"));
    CHECK(cmd_sweep(fixtures::path("scenarios/halt_push.json"), {}, {0.8}, csv, {}, out, err) == kExitInput);
    CHECK(cmd_sweep(fixtures::path("scenarios/halt_push.json"), {-0.1}, {0.8}, csv, {}, out, err) == kExitInput);
  }

  TEST_CASE("fit command") {
    std::ostringstream out, err;
    CHECK(cmd_fit(fixtures::path("tests/fixtures/rolling_noiseless.csv"), 0.5, out, err) == kExitOk);
    const std::string s = out.str();
    CHECK(s.find("r_squared 1.000000\n") != std::string::npos);
    CHECK(s.find("v0 0.650000\n") != std::string::npos);
    CHECK(s.find("decel 0.050000\n") != std::string::npos);
    CHECK(s.find("predicted_time 1.000000\n") != std::string::npos);

    std::ostringstream o2, e2;
    CHECK(cmd_fit(fixtures::path("tests/fixtures/rolling_short.csv"), 0.5, o2, e2) == kExitInput);
    CHECK(!e2.str().empty());

    std::ostringstream o3, e3;
    CHECK(cmd_fit(fixtures::path("tests/fixtures/rolling_noisy.csv"), 0.5, o3, e3) == kExitOk);
    std::istringstream lines(o3.str());
    std::string key, value;
    while (lines >> key >> value) {
      const auto dot = value.find('.');
      REQUIRE(dot != std::string::npos);
      CHECK(value.size() - dot - 1 == 6);
    }
  }
}
