#include "impactplan/cli/scenario_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>

#include "json.hpp"

namespace impactplan::cli {

using nlohmann::json;

std::string Diagnostic::str() const {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  if (!field.empty() && message.rfind(field, 0) != 0) out += field + ": ";
  return out + message;
}

namespace {

std::string join_messages(const std::vector<Diagnostic>& d) {
  std::string out;
  for (const auto& x : d) {
    if (!out.empty()) out += "\n";
    out += x.str();
  }
  return out;
}

std::string child(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string element(const std::string& parent, std::size_t i) { return parent + "[" + std::to_string(i) + "]"; }

// Line of every object key and every container element, by dotted path.
std::map<std::string, int> index_lines(const std::string& text) {
  struct Frame {
    bool object;
    std::string path;
    std::size_t index = 0;
    bool expect_key = true;
  };
  std::map<std::string, int> lines;
  std::vector<Frame> stack;
  std::string pending;
  int line = 1;
  auto value_path = [&]() -> std::string {
    if (stack.empty()) return "";
    if (stack.back().object) return pending;
    return element(stack.back().path, stack.back().index);
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch == '\n') {
      ++line;
    } else if (ch == '"') {
      std::string s;
      const int start_line = line;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        if (text[i] == '\n') ++line;
        s += text[i];
      }
      if (!stack.empty() && stack.back().object && stack.back().expect_key) {
        pending = child(stack.back().path, s);
        lines.emplace(pending, start_line);
        stack.back().expect_key = false;
      } else if (!stack.empty() && !stack.back().object) {
        lines.emplace(value_path(), start_line);
      }
    } else if (ch == '{' || ch == '[') {
      const std::string p = value_path();
      if (!stack.empty() && !stack.back().object) lines.emplace(p, line);
      stack.push_back({ch == '{', p});
    } else if (ch == '}' || ch == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (ch == ',') {
      if (!stack.empty()) {
        if (stack.back().object)
          stack.back().expect_key = true;
        else
          ++stack.back().index;
      }
    } else if (!std::isspace(static_cast<unsigned char>(ch)) && ch != ':' && !stack.empty() && !stack.back().object) {
      lines.emplace(value_path(), line);
    }
  }
  return lines;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : lines_(index_lines(text)) {}

  int line_of(std::string path) const {
    while (!path.empty()) {
      if (auto it = lines_.find(path); it != lines_.end()) return it->second;
      const auto cut = path.find_last_of(".[");
      if (cut == std::string::npos) break;
      path.resize(cut);
    }
    return 0;
  }

  void error(const std::string& path, const std::string& msg) { diags.push_back({line_of(path), path, msg}); }

  // Message from validation code: the leading token names the field.
  void validation(const std::string& msg) {
    const std::string field = msg.substr(0, msg.find_first_of(" :"));
    const bool named = field == "spatial_dim" || field == "task" || field == "modes" ||
                       field.find_first_of(".[") != std::string::npos;
    diags.push_back({named ? line_of(field) : 0, named ? field : "", msg});
  }

  void allow(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : obj.items()) {
      if (std::find_if(keys.begin(), keys.end(), [&](const char* a) { return k == a; }) == keys.end())
        error(child(path, k), "unknown key");
    }
  }

  const json* object(const json& parent, const std::string& path, const char* key, bool required) {
    const std::string p = child(path, key);
    if (!parent.contains(key)) {
      if (required) error(p, "missing required field");
      return nullptr;
    }
    const json& v = parent.at(key);
    if (!v.is_object()) {
      error(p, "expected an object");
      return nullptr;
    }
    return &v;
  }

  bool number(const json& parent, const std::string& path, const char* key, double& out, bool required) {
    const std::string p = child(path, key);
    if (!parent.contains(key)) {
      if (required) error(p, "missing required field");
      return false;
    }
    const json& v = parent.at(key);
    if (!v.is_number()) {
      error(p, "expected a number");
      return false;
    }
    out = v.get<double>();
    return true;
  }

  bool integer(const json& parent, const std::string& path, const char* key, int& out, bool required) {
    const std::string p = child(path, key);
    if (!parent.contains(key)) {
      if (required) error(p, "missing required field");
      return false;
    }
    const json& v = parent.at(key);
    if (!v.is_number_integer()) {
      error(p, "expected an integer");
      return false;
    }
    out = v.get<int>();
    return true;
  }

  bool vec(const json& parent, const std::string& path, const char* key, Vec& out, bool required) {
    const std::string p = child(path, key);
    if (!parent.contains(key)) {
      if (required) error(p, "missing required field");
      return false;
    }
    const json& v = parent.at(key);
    if (v.is_number()) {
      out = Vec::Constant(1, v.get<double>());
      return true;
    }
    if (!v.is_array() || v.empty()) {
      error(p, "expected a number or a non-empty array of numbers");
      return false;
    }
    out.resize(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        error(element(p, i), "expected a number");
        return false;
      }
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return true;
  }

  bool pair(const json& parent, const std::string& path, const char* key, double& a, double& b) {
    const std::string p = child(path, key);
    if (!parent.contains(key)) return false;
    const json& v = parent.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      error(p, "expected [min, max]");
      return false;
    }
    a = v[0].get<double>();
    b = v[1].get<double>();
    return true;
  }

  std::vector<Diagnostic> diags;

 private:
  std::map<std::string, int> lines_;
};

void read_object(Reader& r, const json& o, ObjectModel& obj) {
  r.allow(o, "object", {"mass", "inertia", "surface_points", "contact_point", "contact_normal"});
  r.number(o, "object", "mass", obj.mass, true);
  r.number(o, "object", "inertia", obj.inertia, false);
  if (!o.contains("surface_points")) {
    r.error("object.surface_points", "missing required field");
  } else {
    const json& pts = o.at("surface_points");
    std::vector<Vec2> points;
    bool ok = pts.is_array();
    if (!ok) r.error("object.surface_points", "expected an array of [x, y] points");
    for (std::size_t i = 0; ok && i < pts.size(); ++i) {
      const json& q = pts[i];
      if (!q.is_array() || q.size() != 2 || !q[0].is_number() || !q[1].is_number()) {
        r.error(element("object.surface_points", i), "expected [x, y]");
        ok = false;
        break;
      }
      points.emplace_back(q[0].get<double>(), q[1].get<double>());
    }
    if (ok && points.size() < 4) {
      r.error("object.surface_points", "need at least 4 points");
      ok = false;
    }
    if (ok) {
      try {
        obj.surface = geometry::SurfaceSpline::from_points(points);
      } catch (const std::exception& e) {
        r.error("object.surface_points", e.what());
      }
    }
  }
  Vec cp;
  if (r.vec(o, "object", "contact_point", cp, true)) {
    if (cp.size() != 2)
      r.error("object.contact_point", "expected [x, y]");
    else
      obj.contact_point = cp;
  }
  r.vec(o, "object", "contact_normal", obj.contact_normal, true);
}

void read_task(Reader& r, const json& t, Task& task) {
  r.allow(t, "task",
          {"y0", "ydot0", "yN", "ydotN", "friction_mu", "f_max", "alpha_bounds", "dt_bounds", "ee_accel_max",
           "ee_start"});
  r.vec(t, "task", "y0", task.y0, true);
  r.vec(t, "task", "ydot0", task.ydot0, true);
  Vec v;
  if (r.vec(t, "task", "yN", v, false)) task.yN = v;
  if (r.vec(t, "task", "ydotN", v, false)) task.ydotN = v;
  if (r.vec(t, "task", "ee_start", v, false)) task.ee_start = v;
  r.number(t, "task", "friction_mu", task.friction_mu, false);
  r.number(t, "task", "f_max", task.f_max, false);
  r.number(t, "task", "ee_accel_max", task.ee_accel_max, false);
  r.pair(t, "task", "alpha_bounds", task.alpha_min, task.alpha_max);
  r.pair(t, "task", "dt_bounds", task.dt_min, task.dt_max);
}

void read_modes(Reader& r, const json& root, ModeSequence& z) {
  if (!root.contains("modes")) {
    r.error("modes", "missing required field");
    return;
  }
  const json& m = root.at("modes");
  if (!m.is_array()) {
    r.error("modes", "expected an array of {k, l, knots}");
    return;
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::string p = element("modes", i);
    if (!m[i].is_object()) {
      r.error(p, "expected {k, l, knots}");
      continue;
    }
    r.allow(m[i], p, {"k", "l", "knots"});
    Mode mode;
    int knots = 0;
    r.integer(m[i], p, "k", mode.contact, true);
    r.integer(m[i], p, "l", mode.stage, true);
    r.integer(m[i], p, "knots", knots, true);
    z.modes.push_back(mode);
    z.knots_per_mode.push_back(knots);
  }
}

void read_solver(Reader& r, const json& o, Scenario& s) {
  r.allow(o, "solver", {"tolerances", "max_iters", "weights", "penalty", "inner_method", "lbfgs_memory"});
  if (const json* tol = r.object(o, "solver", "tolerances", false)) {
    r.allow(*tol, "solver.tolerances", {"feas", "opt"});
    r.number(*tol, "solver.tolerances", "feas", s.solver.feas_tol, false);
    r.number(*tol, "solver.tolerances", "opt", s.solver.opt_tol, false);
  }
  if (const json* it = r.object(o, "solver", "max_iters", false)) {
    r.allow(*it, "solver.max_iters", {"outer", "inner"});
    r.integer(*it, "solver.max_iters", "outer", s.solver.max_outer, false);
    r.integer(*it, "solver.max_iters", "inner", s.solver.max_inner, false);
  }
  if (const json* w = r.object(o, "solver", "weights", false)) {
    r.allow(*w, "solver.weights", {"force", "accel", "time", "stiffness"});
    r.number(*w, "solver.weights", "force", s.weights.force, false);
    r.number(*w, "solver.weights", "accel", s.weights.accel, false);
    r.number(*w, "solver.weights", "time", s.weights.time, false);
    r.number(*w, "solver.weights", "stiffness", s.weights.stiffness, false);
  }
  if (const json* pen = r.object(o, "solver", "penalty", false)) {
    r.allow(*pen, "solver.penalty", {"initial", "growth", "max"});
    r.number(*pen, "solver.penalty", "initial", s.solver.initial_penalty, false);
    r.number(*pen, "solver.penalty", "growth", s.solver.penalty_growth, false);
    r.number(*pen, "solver.penalty", "max", s.solver.max_penalty, false);
  }
  if (o.contains("inner_method")) {
    const json& m = o.at("inner_method");
    if (m == "structured")
      s.solver.inner_method = nlp::InnerMethod::structured;
    else if (m == "lbfgs")
      s.solver.inner_method = nlp::InnerMethod::lbfgs;
    else
      r.error("solver.inner_method", "expected \"structured\" or \"lbfgs\"");
  }
  r.integer(o, "solver", "lbfgs_memory", s.solver.lbfgs_memory, false);
}

void read_sim(Reader& r, const json& o, SimSettings& sim) {
  r.allow(o, "sim", {"dt", "virtual_mass", "hold_time", "horizon"});
  r.number(o, "sim", "dt", sim.dt, false);
  double mv = 0.0;
  if (r.number(o, "sim", "virtual_mass", mv, false)) sim.virtual_mass = mv;
  r.number(o, "sim", "hold_time", sim.hold_time, false);
  r.number(o, "sim", "horizon", sim.horizon, false);
}

}  // namespace

ScenarioError::ScenarioError(std::vector<Diagnostic> d) : std::runtime_error(join_messages(d)), diags_(std::move(d)) {}

ScenarioFile parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    throw ScenarioError({{line, "", std::string("malformed JSON: ") + e.what()}});
  }
  if (!root.is_object()) throw ScenarioError({{1, "", "expected a JSON object at the top level"}});

  Reader r(text);
  ScenarioFile out;
  Scenario& s = out.scenario;
  r.allow(root, "", {"spatial_dim", "object", "workspace", "task", "modes", "solver", "sim"});
  if (const json* o = r.object(root, "", "object", true)) read_object(r, *o, s.object);
  if (const json* w = r.object(root, "", "workspace", true)) {
    r.allow(*w, "workspace", {"lower", "upper"});
    r.vec(*w, "workspace", "lower", s.workspace.lower, true);
    r.vec(*w, "workspace", "upper", s.workspace.upper, true);
  }
  if (const json* t = r.object(root, "", "task", true)) read_task(r, *t, s.task);
  read_modes(r, root, out.modes);
  if (const json* o = r.object(root, "", "solver", false)) read_solver(r, *o, s);
  if (const json* o = r.object(root, "", "sim", false)) read_sim(r, *o, s.sim);
  s.dim = static_cast<int>(s.task.y0.size());
  r.integer(root, "", "spatial_dim", s.dim, false);

  if (r.diags.empty()) {
    for (const auto& m : validate_scenario(s)) r.validation(m);
    for (const auto& m : out.modes.violations()) r.validation(m);
  }
  if (!r.diags.empty()) throw ScenarioError(std::move(r.diags));
  return out;
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({{0, "", "cannot read " + path}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace impactplan::cli
