#include "impactplan/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace impactplan {

std::string to_string(const Mode& m) {
  std::ostringstream os;
  os << "(k=" << m.contact << ", l=" << m.stage << ")";
  return os.str();
}

int ModeSequence::total_knots() const {
  int n = 0;
  for (int k : knots_per_mode) n += k;
  return n;
}

std::vector<int> ModeSequence::knot_modes() const {
  std::vector<int> out;
  out.reserve(total_knots());
  for (std::size_t j = 0; j < knots_per_mode.size(); ++j)
    out.insert(out.end(), knots_per_mode[j], static_cast<int>(j));
  return out;
}

std::vector<int> ModeSequence::mode_starts() const {
  std::vector<int> out;
  int i = 0;
  for (int k : knots_per_mode) {
    out.push_back(i);
    i += k;
  }
  return out;
}

int ModeSequence::contact_stage_count() const {
  return static_cast<int>(std::count_if(modes.begin(), modes.end(),
                                        [](const Mode& m) { return m.in_contact(); }));
}

std::vector<std::string> ModeSequence::violations() const {
  std::vector<std::string> v;
  if (modes.empty()) v.push_back("modes must not be empty");
  if (modes.size() != knots_per_mode.size())
    v.push_back("modes and knots_per_mode must have the same length");
  for (std::size_t j = 0; j < modes.size(); ++j) {
    const Mode& m = modes[j];
    const std::string at = "modes[" + std::to_string(j) + "]";
    if (m.contact != 0 && m.contact != 1) v.push_back(at + ".k must be 0 or 1");
    if (m.contact == 0 && m.stage != 0) v.push_back(at + ": k = 0 requires l = 0");
    if (m.contact == 1 && m.stage != -1 && m.stage != 1) v.push_back(at + ": k = 1 requires l in {-1, +1}");
    if (j < knots_per_mode.size() && knots_per_mode[j] < 2)
      v.push_back(at + ".knots must be >= 2");
    if (j > 0 && modes[j - 1] == m) v.push_back(at + " repeats the previous mode");
    // Within one contact the deformation stage precedes the restitution stage.
    if (j > 0 && m.contact == 1 && m.stage == -1 && modes[j - 1].contact == 1 && modes[j - 1].stage == 1)
      v.push_back(at + ": stage l = -1 cannot follow l = +1 within one contact");
  }
  return v;
}

std::pair<double, double> Workspace::crossing(const Vec& p0, const Vec& v) const {
  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  for (int k = 0; k < p0.size(); ++k) {
    if (v[k] == 0.0) {
      if (p0[k] < lower[k] || p0[k] > upper[k]) return {1.0, 0.0};
      continue;
    }
    const double a = (lower[k] - p0[k]) / v[k];
    const double b = (upper[k] - p0[k]) / v[k];
    t_in = std::max(t_in, std::min(a, b));
    t_out = std::min(t_out, std::max(a, b));
  }
  return {t_in, t_out};
}

Vec Scenario::contact_point_world(const Vec& y) const {
  Vec p(dim);
  for (int k = 0; k < dim; ++k) p[k] = y[k] + object.contact_point[k];
  return p;
}

namespace {

void check_vec(std::vector<std::string>& v, const Vec& x, int dim, const std::string& name) {
  if (x.size() != dim) {
    v.push_back(name + " must have " + std::to_string(dim) + " entries");
    return;
  }
  if (!x.allFinite()) v.push_back(name + " must be finite");
}

}  // namespace

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> v;
  if (s.dim != 1 && s.dim != 2) {
    v.push_back("spatial_dim must be 1 or 2");
    return v;
  }
  const int d = s.dim;
  const ObjectModel& o = s.object;
  if (!(o.mass > 0.0)) v.push_back("object.mass must be > 0");
  if (!(o.inertia >= 0.0)) v.push_back("object.inertia must be >= 0");
  if (o.surface.empty()) {
    v.push_back("object.surface must have at least 4 points");
  } else {
    const double dist = std::abs(o.surface.signed_distance(o.contact_point));
    if (dist > 1e-6)
      v.push_back("object.contact_point must lie on the surface within 1e-6 m (off by " +
                  std::to_string(dist) + " m)");
  }
  if (o.contact_normal.size() != d) {
    v.push_back("object.contact_normal must have " + std::to_string(d) + " entries (spatial_dim)");
  } else if (std::abs(o.contact_normal.norm() - 1.0) > 1e-9) {
    v.push_back("object.contact_normal must be a unit vector");
  }

  const Workspace& w = s.workspace;
  check_vec(v, w.lower, d, "workspace.lower");
  check_vec(v, w.upper, d, "workspace.upper");
  if (w.lower.size() == d && w.upper.size() == d)
    for (int k = 0; k < d; ++k)
      if (!(w.lower[k] < w.upper[k]))
        v.push_back("workspace.lower < workspace.upper violated on axis " + std::to_string(k));

  const Task& t = s.task;
  check_vec(v, t.y0, d, "task.y0");
  check_vec(v, t.ydot0, d, "task.ydot0");
  if (t.yN) check_vec(v, *t.yN, d, "task.yN");
  if (t.ydotN) check_vec(v, *t.ydotN, d, "task.ydotN");
  if (!t.yN && !t.ydotN) v.push_back("task: at least one of yN, ydotN must be given");
  if (!(t.friction_mu >= 0.0)) v.push_back("task.friction_mu must be >= 0");
  if (!(t.f_max > 0.0)) v.push_back("task.f_max must be > 0");
  if (!(t.alpha_min > 0.0)) v.push_back("task.alpha_bounds: alpha_min must be > 0");
  if (!(t.alpha_min <= t.alpha_max)) v.push_back("task.alpha_bounds: alpha_min must be <= alpha_max");
  if (!(t.dt_min > 0.0)) v.push_back("task.dt_bounds: dt_min must be > 0");
  if (!(t.dt_min <= t.dt_max)) v.push_back("task.dt_bounds: dt_min must be <= dt_max");
  if (!(t.ee_accel_max > 0.0)) v.push_back("task.ee_accel_max must be > 0");
  if (t.ee_start) check_vec(v, *t.ee_start, d, "task.ee_start");

  if (!(s.sim.dt > 0.0)) v.push_back("sim.dt must be > 0");
  if (s.sim.virtual_mass && !(*s.sim.virtual_mass > 0.0)) v.push_back("sim.virtual_mass must be > 0");
  return v;
}

const StageParams* Trajectory::stage_for_mode(int mode) const {
  for (const auto& st : stages)
    if (st.mode == mode) return &st;
  return nullptr;
}

double Trajectory::normal_force(int knot, const Vec& normal) const {
  return knots[knot].f.dot(normal);
}

double Trajectory::peak_force() const {
  double p = 0.0;
  for (const auto& k : knots) p = std::max(p, k.f.norm());
  return p;
}

double Trajectory::first_contact_time() const {
  for (std::size_t i = 0; i < knots.size(); ++i)
    if (mode_at(static_cast<int>(i)).in_contact()) return knots[i].t;
  return 0.0;
}

double Trajectory::contact_duration() const {
  int first = -1, last = -1;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (mode_at(static_cast<int>(i)).in_contact()) {
      if (first < 0) first = static_cast<int>(i);
      last = static_cast<int>(i);
    }
  }
  if (first < 0) return 0.0;
  return knots[last].t - knots[first].t;
}

const ImpedanceSegment& ImpedanceSchedule::at(double t) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < segments.size(); ++k)
    if (segments[k].t <= t) idx = k;
  return segments.at(idx);
}

std::vector<std::string> trajectory_violations(const Trajectory& traj, const Scenario& s) {
  std::vector<std::string> v;
  const double tol = 1e-9;
  for (std::size_t i = 0; i < traj.knots.size(); ++i) {
    const KnotState& k = traj.knots[i];
    const std::string at = "knot " + std::to_string(i);
    if (k.dt < s.task.dt_min - tol || k.dt > s.task.dt_max + tol) v.push_back(at + ": dt out of bounds");
    const Mode& m = traj.mode_at(static_cast<int>(i));
    if (m.contact == 0 && m.stage != 0) v.push_back(at + ": k = 0 with l != 0");
    if (!m.in_contact() && k.f.lpNorm<Eigen::Infinity>() > tol) v.push_back(at + ": nonzero force in free motion");
    if (i > 0 && !(k.t > traj.knots[i - 1].t)) v.push_back(at + ": time not strictly increasing");
  }
  for (const auto& st : traj.stages)
    if (st.alpha < s.task.alpha_min - tol || st.alpha > s.task.alpha_max + tol)
      v.push_back("stage of mode " + std::to_string(st.mode) + ": alpha out of bounds");
  return v;
}

}  // namespace impactplan
