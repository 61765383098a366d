#pragma once

#include <string>

#include "impactplan/cli/scenario_io.hpp"

namespace fixtures {

inline std::string path(const std::string& rel) { return std::string(IMPACTPLAN_SOURCE_DIR) + "/" + rel; }

inline impactplan::cli::ScenarioFile scenario(const std::string& name) {
  return impactplan::cli::load_scenario(path("scenarios/" + name + ".json"));
}

}  // namespace fixtures
