#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "impactplan/contact.hpp"

using namespace impactplan::contact;
using doctest::Approx;

namespace {

// Independent oracle: the step response written out directly.
double oracle_step(double alpha, double fd, double t) { return fd * (1.0 - (1.0 + alpha * t) * std::exp(-alpha * t)); }

}  // namespace

TEST_SUITE("contact") {
  TEST_CASE("impact energy") {
    CHECK(impact_energy(20, 0.65, 0.0) == Approx(4.225).epsilon(1e-12));
    CHECK(impact_energy(20, 0.3, 0.3) == 0.0);
    CHECK(impact_energy(20, 0.65, 0.325) == Approx(3.16875).epsilon(1e-12));
    CHECK_THROWS_AS(impact_energy(0, 1, 0), std::invalid_argument);
  }

  TEST_CASE("impulse velocity jump") {
    CHECK(impulse_velocity_jump(20, -130, 0.1, 0.65) == Approx(0.0).epsilon(1e-12));
    CHECK(impulse_velocity_jump(7, 0, 0.2, 0.4) == 0.4);
    CHECK(impulse_velocity_jump(20, -65, 0.1, 0.65) == Approx(0.325).epsilon(1e-12));
    CHECK_THROWS_AS(impulse_velocity_jump(-1, 1, 1, 0), std::invalid_argument);
  }

  TEST_CASE("damper dissipation") {
    std::vector<VelocitySample> c{{0.0, 1.0}, {0.5, 1.0}, {1.0, 1.0}};
    CHECK(damper_dissipation(c, 400) == Approx(400.0));
    CHECK(damper_dissipation(c, 0) == 0.0);
    std::vector<VelocitySample> e;
    for (int k = 0; k <= 100000; ++k) e.push_back({k * 1e-4, std::exp(-k * 1e-4)});
    CHECK(damper_dissipation(e, 2.0) == Approx(1.0 - std::exp(-20.0)).epsilon(1e-6));
    CHECK_THROWS(damper_dissipation(std::vector<VelocitySample>{{0, 1}}, 1.0));
  }

  TEST_CASE("stiffness and gains") {
    CHECK(stiffness_to_alpha(2000, 20) == Approx(10));
    CHECK(stiffness_to_alpha(1, 1) == 1.0);
    CHECK(stiffness_to_alpha(8000, 20) == Approx(20));
    CHECK_THROWS(stiffness_to_alpha(0, 1));
    const Gains g = alpha_to_gains(10, 20);
    CHECK(g.K == Approx(2000));
    CHECK(g.B == Approx(400));
    const Gains u = alpha_to_gains(1, 1);
    CHECK(u.K == 1.0);
    CHECK(u.B == 2.0);
    CHECK_THROWS(alpha_to_gains(-1, 1));
  }

  TEST_CASE("gains are critically damped and invert exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> a(0.5, 20.0), m(0.1, 100.0);
    for (int k = 0; k < 200; ++k) {
      const double alpha = a(rng), M = m(rng);
      const Gains g = alpha_to_gains(alpha, M);
      CHECK(std::abs(g.B * g.B - 4.0 * M * g.K) <= 1e-12 * 4.0 * M * g.K);
      CHECK(stiffness_to_alpha(g.K, M) == Approx(alpha).epsilon(1e-12));
      CHECK(ImpactParams::critically_damped(M, g.K).damping_ratio() == Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS(ImpactParams(0, 1, 1));
    CHECK_THROWS(ImpactParams(1, 1, -1));
  }

  TEST_CASE("settling time") {
    CHECK(settling_time(20) == Approx(0.15));
    CHECK(settling_time(3) == 1.0);
    CHECK(settling_time(2.23) == Approx(1.345).epsilon(1e-3));
    CHECK_THROWS(settling_time(0));
    const double x = kFivePercentSettlingAlphaT;
    CHECK((1.0 + x) * std::exp(-x) == Approx(0.05).epsilon(1e-12));
  }

  TEST_CASE("closed form") {
    const double v = oracle_step(10, 100, 0.3);
    CHECK(v == Approx(80.0852).epsilon(1e-6));
    CHECK(cdds_closed_form(10, 100, 0.3) == Approx(80.08517265285442).epsilon(1e-12));
    CHECK(cdds_closed_form(4, 9, 0) == 0.0);
    CHECK(cdds_closed_form(4, 9, 1e3) == Approx(9));
    CHECK(cdds_closed_form(1, 1, 3.0) == Approx(0.8008517265285442).epsilon(1e-12));
  }

  TEST_CASE("step agrees with closed form and never overshoots") {
    for (double alpha : {1.0, 5.0, 10.0, 20.0})
      for (double dt : {1e-3, 0.01, 0.1, 0.37}) {
        ForceState s;
        double prev = 0.0;
        for (double t = dt; t <= 2.0 + 1e-12; t += dt) {
          s = cdds_step(s, alpha, 50.0, dt);
          const double ref = cdds_closed_form(alpha, 50.0, t);
          CHECK(std::abs(s.f - ref) <= 1e-9 * std::max(1.0, ref));
          CHECK(s.f <= 50.0);
          CHECK(s.f >= prev - 1e-12);
          prev = s.f;
        }
      }
  }

  TEST_CASE("step fixed points and errors") {
    const ForceState eq = cdds_step({30.0, 0.0}, 5.0, 30.0, 0.7);
    CHECK(eq.f == Approx(30.0).epsilon(1e-15));
    CHECK(eq.fdot == Approx(0.0));
    const ForceState z = cdds_step({0.0, 0.0}, 5.0, 0.0, 0.7);
    CHECK(z.f == 0.0);
    CHECK(z.fdot == 0.0);
    CHECK_THROWS_AS(cdds_step({}, 5.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(cdds_step({}, 0.0, 1.0, 0.1), std::invalid_argument);
  }

  TEST_CASE("force model acceleration matches the ODE") {
    CHECK(cdds_acceleration(2.0, 3.0, 4.0, 10.0) == Approx(16.0 * 8.0 - 24.0));
  }
}
