#pragma once

// Eccentrically loaded drivetrain: flywheel J driven by torque u, loaded by a
// spring-damper attached at radius r and suspended at distance l from the
// shaft centre. The spring's rest length is parameterized by the rest angle
// theta0, which is uncertain: theta0 = pi/2 + omega pi/4, omega ~ U(-1, 1).
// State is (theta, theta_dot).

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>

#include "pcesocp/basis.hpp"
#include "pcesocp/propagation.hpp"

namespace pcesocp::drivetrain {

/// Spring torque law.
///   Elastic:   k (1 - L(theta0) / L(theta)) r l sin(theta), i.e. k (L - L0) dL/dtheta,
///              so theta0 is a stable rest angle.
///   AsPrinted: k (1 - L(theta) / L(theta0)) r l sin(theta).
/// L(theta) = sqrt(r^2 + l^2 - 2 r l cos(theta)) is the spring length.
enum class SpringLaw { Elastic, AsPrinted };

SpringLaw parse_spring_law(std::string_view name);
std::string_view to_string(SpringLaw law);

struct Params {
  double inertia = 1.0;     // J, kg m^2
  double stiffness = 1.0;   // k
  double damping = 0.5;     // b
  double radius = 1.0;      // r, m
  double suspension = 1.5;  // l, m
  SpringLaw spring_law = SpringLaw::Elastic;

  /// Throws DomainError unless all parameters are positive and l > r.
  void validate() const;
};

double spring_length(double theta, const Params& params);
double spring_torque(double theta, double rest_angle, const Params& params);
double damper_torque(double theta, double theta_dot, const Params& params);

/// (theta_dot, (u - T_k - T_b) / J).
std::array<double, 2> dynamics(double t, std::span<const double> state, double u,
                               double rest_angle, const Params& params);

/// theta0(omega) = pi/2 + omega pi/4.
double rest_angle(double omega);
/// Uniform(-1, 1).
ParameterSpace rest_angle_space();

struct ReferencePoint {
  double angle;
  double rate;
  double acceleration;
};

/// Smoothed ramp: pi/8 t^2 + pi/2 before t = 2 s, pi/2 t afterwards.
ReferencePoint reference_trajectory(double t);

/// Step policies of the two step-response scenarios: 1 -> 0.5 N m, 2 -> 1 N m.
double scenario_input(int scenario, double t);

/// Uncertain ODE driven by an arbitrary input u(t), starting at rest in the
/// rest angle: x(0, omega) = (theta0(omega), 0).
UncertainOde make_ode(std::function<double(double)> input, const Params& params = {},
                      double horizon = 10.0);
UncertainOde scenario_ode(int scenario, const Params& params = {}, double horizon = 10.0);

/// Feedforward torque J r'' + T_k(r) + T_b(r, r') at the nominal rest angle.
double computed_torque(double t, const Params& params = {});

}  // namespace pcesocp::drivetrain
