#pragma once

// Impact mechanics and the critically damped contact-force transmission model.
//
// The force transmission model is the second-order system
//
//     f'' + 2 alpha f' + alpha^2 f = alpha^2 f_d
//
// whose step response from rest never overshoots f_d. Its parameter alpha maps
// onto a critically damped impedance (K, B) for a given mass M through
// alpha = sqrt(K / M) and B = 2 sqrt(M K).
//
// The restitution coefficient of a collision (1 elastic, 0 perfectly
// inelastic) is determined by (M, B, K) but no closed form is used here.

#include <cmath>
#include <span>
#include <stdexcept>

#include "impactplan/nlp/dual.hpp"

namespace impactplan::contact {

/// alpha * t at which a critically damped step response from rest reaches 95%
/// of its target, i.e. the root of (1 + x) e^-x = 0.05.
inline constexpr double kFivePercentSettlingAlphaT = 4.743864518390577;

/// Numerator of the settling-time rule t_s = 3.0 / alpha.
inline constexpr double kSettlingNumerator = 3.0;

struct ImpactParams {
  double M = 0.0;  // kg
  double K = 0.0;  // N/m
  double B = 0.0;  // N s/m

  /// Throws std::invalid_argument unless M > 0, K > 0, B >= 0.
  ImpactParams(double mass, double stiffness, double damping);
  static ImpactParams critically_damped(double mass, double stiffness);

  double alpha() const { return std::sqrt(K / M); }
  double natural_frequency() const { return std::sqrt(K / M); }
  double damping_ratio() const { return B / (2.0 * std::sqrt(M * K)); }
};

struct ForceState {
  double f = 0.0;     // N
  double fdot = 0.0;  // N/s
};

struct Gains {
  double K = 0.0;  // N/m
  double B = 0.0;  // N s/m
};

struct VelocitySample {
  double t = 0.0;     // s
  double xdot = 0.0;  // m/s
};

/// Energy removed by an impulsive velocity change: M (v-^2 - v+^2) / 2.
double impact_energy(double mass, double v_minus, double v_plus);

/// Post-impact velocity v+ = v- + lambda dt / M.
double impulse_velocity_jump(double mass, double lambda, double dt, double v_minus);

/// Trapezoidal estimate of the integral of B xdot^2 over the samples.
double damper_dissipation(std::span<const VelocitySample> samples, double B);

double stiffness_to_alpha(double K, double M);
Gains alpha_to_gains(double alpha, double M);
double settling_time(double alpha);

/// Advances the force model exactly over dt (closed-form solution of the
/// linear ODE). Written against a generic scalar so the planner can
/// differentiate through it.
template <typename T>
void cdds_propagate(const T& f, const T& fdot, const T& alpha, const T& f_d, const T& dt, T& f_next,
                    T& fdot_next) {
  using std::exp;
  const T e0 = f - f_d;
  const T c = fdot + alpha * e0;
  const T decay = exp(-alpha * dt);
  f_next = f_d + (e0 + c * dt) * decay;
  fdot_next = (fdot - alpha * c * dt) * decay;
}

/// Second derivative implied by the force model at a state.
template <typename T>
T cdds_acceleration(const T& f, const T& fdot, const T& alpha, const T& f_d) {
  return alpha * alpha * (f_d - f) - 2.0 * alpha * fdot;
}

/// One exact step. Throws std::invalid_argument for dt <= 0 or alpha <= 0.
ForceState cdds_step(ForceState state, double alpha, double f_d, double dt);

/// Step response from rest: f_d (1 - (1 + alpha t) e^(-alpha t)).
double cdds_closed_form(double alpha, double f_d, double t);

}  // namespace impactplan::contact
