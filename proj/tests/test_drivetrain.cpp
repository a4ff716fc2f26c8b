#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pcesocp/drivetrain.hpp"
#include "pcesocp/errors.hpp"

using namespace pcesocp;
namespace dt = pcesocp::drivetrain;

namespace {

constexpr double kPi = std::numbers::pi;

// V(theta) = int_{theta0}^{theta} T_k by composite Gauss-Legendre (5 points per panel).
double spring_potential(double theta, double theta0, const dt::Params& p) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  const int panels = 2000;
  const double h = (theta - theta0) / panels;
  double v = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = theta0 + (k + 0.5) * h;
    for (int i = 0; i < 5; ++i) v += 0.5 * h * w[i] * dt::spring_torque(mid + 0.5 * h * x[i], theta0, p);
  }
  return v;
}

double final_angle(double omega, int scenario, const dt::Params& p = {}) {
  const auto ode = dt::scenario_ode(scenario, p);
  const double x0[2] = {dt::rest_angle(omega), 0.0};
  const auto traj = integrate_ode(
      [&](double t, auto x, auto dx) {
        const double w[1] = {omega};
        ode.dynamics(t, x, std::span<const double>(w, 1), dx);
      },
      std::span<const double>(x0, 2), TimeGrid::over(10.0, 1e-3, 100));
  return traj.states(Eigen::last, 0);
}

}  // namespace

TEST_CASE("spring torque") {
  for (auto law : {dt::SpringLaw::Elastic, dt::SpringLaw::AsPrinted}) {
    dt::Params p;
    p.spring_law = law;
    CHECK(dt::spring_torque(1.1, 1.1, p) == 0.0);
    CHECK(std::abs(dt::spring_torque(0.0, kPi / 2, p)) < 1e-15);
    CHECK(std::abs(dt::spring_torque(kPi, kPi / 2, p)) < 1e-15);
  }
  // Elastic law restores toward theta0; the printed one pushes away.
  dt::Params p;
  CHECK(dt::spring_torque(kPi / 2 + 0.1, kPi / 2, p) > 0.0);
  p.spring_law = dt::SpringLaw::AsPrinted;
  CHECK(dt::spring_torque(kPi / 2 + 0.1, kPi / 2, p) < 0.0);

  CHECK(dt::parse_spring_law("printed") == dt::SpringLaw::AsPrinted);
  CHECK_THROWS_AS(dt::parse_spring_law("linear"), Error);
}

TEST_CASE("elastic spring torque is the gradient of k (L - L0)^2 / 2") {
  const dt::Params p;
  const double theta0 = 1.2;
  const double l0 = dt::spring_length(theta0, p);
  for (double th : {0.3, 1.0, 2.0, 3.5}) {
    const double closed = 0.5 * p.stiffness * std::pow(dt::spring_length(th, p) - l0, 2);
    CHECK(spring_potential(th, theta0, p) == doctest::Approx(closed).epsilon(1e-10));
  }
}

TEST_CASE("damper torque") {
  const dt::Params p;
  CHECK(dt::damper_torque(1.0, 0.0, p) == 0.0);
  CHECK(dt::damper_torque(kPi / 2, 1.0, p) == doctest::Approx(0.5 * 2.25 / 3.25).epsilon(1e-12));
  for (double th : {0.2, 1.5, 3.0, 5.0})
    for (double rate : {-2.0, -0.1, 0.3, 4.0}) CHECK(dt::damper_torque(th, rate, p) * rate >= 0.0);
}

TEST_CASE("dynamics examples and parameter validation") {
  const dt::Params p;
  const double rest[2] = {0.9, 0.0};
  auto d = dt::dynamics(0.0, rest, 0.0, 0.9, p);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.0);
  d = dt::dynamics(0.0, rest, 1.0, 0.9, p);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == doctest::Approx(1.0));

  dt::Params bad;
  bad.suspension = 0.8;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = dt::Params{};
  bad.inertia = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("rest angle and reference trajectory") {
  CHECK(dt::rest_angle(-1.0) == doctest::Approx(kPi / 4));
  CHECK(dt::rest_angle(1.0) == doctest::Approx(3 * kPi / 4));
  CHECK(dt::reference_trajectory(0.0).angle == doctest::Approx(kPi / 2));
  const auto before = dt::reference_trajectory(2.0 - 1e-12);
  const auto after = dt::reference_trajectory(2.0);
  CHECK(after.angle == doctest::Approx(kPi));
  CHECK(before.angle == doctest::Approx(after.angle));
  CHECK(before.rate == doctest::Approx(kPi / 2));
  CHECK(after.rate == doctest::Approx(kPi / 2));
  CHECK(before.acceleration == doctest::Approx(kPi / 4));
  CHECK(after.acceleration == 0.0);
  CHECK(dt::scenario_input(1, 5.0) == 0.5);
  CHECK(dt::scenario_input(2, 0.0) == 1.0);
  CHECK_THROWS_AS(dt::scenario_input(3, 0.0), DomainError);
}

TEST_CASE("computed torque at the start is the ramp acceleration") {
  // r = pi/2 = theta0 nominal, r' = 0: the spring and damper vanish.
  CHECK(dt::computed_torque(0.0) == doctest::Approx(kPi / 4));
  const dt::Params p;
  const auto r = dt::reference_trajectory(5.0);
  CHECK(dt::computed_torque(5.0) ==
        doctest::Approx(dt::spring_torque(r.angle, kPi / 2, p) + dt::damper_torque(r.angle, r.rate, p)));
}

TEST_CASE("equilibrium holds at rest without input") {
  for (double omega : {-1.0, -0.3, 0.0, 0.8}) {
    const auto ode = dt::make_ode([](double) { return 0.0; });
    const double w[1] = {omega};
    double x0[2];
    ode.initial(std::span<const double>(w, 1), x0);
    const auto traj = integrate_ode(
        [&](double t, auto x, auto dx) { ode.dynamics(t, x, std::span<const double>(w, 1), dx); },
        std::span<const double>(x0, 2), TimeGrid::over(10.0, 1e-3, 100));
    CHECK(std::abs(traj.states(Eigen::last, 0) - dt::rest_angle(omega)) < 1e-9);
    CHECK(std::abs(traj.states(Eigen::last, 1)) < 1e-9);
  }
}

TEST_CASE("energy is conserved without damping and input") {
  for (auto law : {dt::SpringLaw::Elastic, dt::SpringLaw::AsPrinted}) {
    dt::Params p;
    p.damping = 1e-300;
    p.spring_law = law;
    const double theta0 = dt::rest_angle(0.3);
    const double x0[2] = {theta0, 2.0};
    const auto traj = integrate_ode(
        [&](double t, auto x, auto dx) {
          const auto d = dt::dynamics(t, x, 0.0, theta0, p);
          dx[0] = d[0];
          dx[1] = d[1];
        },
        std::span<const double>(x0, 2), TimeGrid::over(10.0, 1e-4, 1000));
    const auto energy = [&](Eigen::Index i) {
      return 0.5 * p.inertia * std::pow(traj.states(i, 1), 2) + spring_potential(traj.states(i, 0), theta0, p);
    };
    const double e0 = energy(0);
    double drift = 0.0;
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i) drift = std::max(drift, std::abs(energy(i) - e0));
    CHECK(drift / std::abs(e0) < 1e-4);
  }
}

TEST_CASE("scenario 2 rotates for every rest angle") {
  for (double omega : {-1.0, -0.5, 0.0, 0.5, 1.0}) CHECK(final_angle(omega, 2) > 4 * kPi);
}

TEST_CASE("scenario 1 splits into settling and rotating rest angles") {
  // Both ends of the rest-angle range settle within one turn of the start; the
  // middle keeps rotating.
  const double left = final_angle(-1.0, 1), middle = final_angle(0.0, 1), right = final_angle(1.0, 1);
  CHECK(std::abs(left - dt::rest_angle(-1.0)) < 2 * kPi);
  CHECK(std::abs(right - dt::rest_angle(1.0)) < 2 * kPi);
  CHECK(middle - dt::rest_angle(0.0) > 2 * kPi);
  CHECK(middle - right > 2 * kPi);
}
