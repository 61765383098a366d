#include "impactplan/contact.hpp"

#include <string>

namespace impactplan::contact {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be > 0");
}

}  // namespace

ImpactParams::ImpactParams(double mass, double stiffness, double damping)
    : M(mass), K(stiffness), B(damping) {
  require_positive(M, "mass");
  require_positive(K, "stiffness");
  if (!(B >= 0.0)) throw std::invalid_argument("damping must be >= 0");
}

ImpactParams ImpactParams::critically_damped(double mass, double stiffness) {
  require_positive(mass, "mass");
  require_positive(stiffness, "stiffness");
  return ImpactParams(mass, stiffness, 2.0 * std::sqrt(mass * stiffness));
}

double impact_energy(double mass, double v_minus, double v_plus) {
  require_positive(mass, "mass");
  return 0.5 * mass * (v_minus * v_minus - v_plus * v_plus);
}

double impulse_velocity_jump(double mass, double lambda, double dt, double v_minus) {
  require_positive(mass, "mass");
  if (!(dt >= 0.0)) throw std::invalid_argument("impact duration must be >= 0");
  return v_minus + lambda * dt / mass;
}

double damper_dissipation(std::span<const VelocitySample> samples, double B) {
  if (samples.size() < 2) throw std::invalid_argument("damper_dissipation needs at least 2 samples");
  if (!(B >= 0.0)) throw std::invalid_argument("damping must be >= 0");
  double e = 0.0;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double dt = samples[k].t - samples[k - 1].t;
    if (dt < 0.0) throw std::invalid_argument("samples must be time-ordered");
    const double a = samples[k - 1].xdot;
    const double b = samples[k].xdot;
    e += 0.5 * dt * B * (a * a + b * b);
  }
  return e;
}

double stiffness_to_alpha(double K, double M) {
  require_positive(K, "stiffness");
  require_positive(M, "mass");
  return std::sqrt(K / M);
}

Gains alpha_to_gains(double alpha, double M) {
  require_positive(alpha, "alpha");
  require_positive(M, "mass");
  const double K = alpha * alpha * M;
  return {K, 2.0 * alpha * M};
}

double settling_time(double alpha) {
  require_positive(alpha, "alpha");
  return kSettlingNumerator / alpha;
}

ForceState cdds_step(ForceState state, double alpha, double f_d, double dt) {
  require_positive(dt, "dt");
  require_positive(alpha, "alpha");
  ForceState next;
  cdds_propagate(state.f, state.fdot, alpha, f_d, dt, next.f, next.fdot);
  return next;
}

double cdds_closed_form(double alpha, double f_d, double t) {
  if (t <= 0.0) return 0.0;
  const double at = alpha * t;
  return f_d * (1.0 - (1.0 + at) * std::exp(-at));
}

}  // namespace impactplan::contact
