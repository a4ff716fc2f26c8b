#include "pcesocp/drivetrain.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pcesocp/errors.hpp"

namespace pcesocp::drivetrain {

using std::numbers::pi;

SpringLaw parse_spring_law(std::string_view name) {
  if (name == "elastic") return SpringLaw::Elastic;
  if (name == "printed") return SpringLaw::AsPrinted;
  throw DomainError("unknown spring law '" + std::string(name) + "' (expected elastic or printed)");
}

std::string_view to_string(SpringLaw law) {
  return law == SpringLaw::Elastic ? "elastic" : "printed";
}

void Params::validate() const {
  if (!(inertia > 0 && stiffness > 0 && damping > 0 && radius > 0 && suspension > 0))
    throw DomainError("drivetrain parameters must be positive");
  if (!(suspension > radius)) throw DomainError("suspension distance must exceed the radius");
}

double spring_length(double theta, const Params& p) {
  const double r = p.radius, l = p.suspension;
  return std::sqrt(r * r + l * l - 2.0 * r * l * std::cos(theta));
}

double spring_torque(double theta, double rest_angle, const Params& p) {
  const double length = spring_length(theta, p);
  const double rest_length = spring_length(rest_angle, p);
  const double ratio = p.spring_law == SpringLaw::Elastic ? rest_length / length : length / rest_length;
  return p.stiffness * (1.0 - ratio) * p.radius * p.suspension * std::sin(theta);
}

double damper_torque(double theta, double theta_dot, const Params& p) {
  const double r = p.radius, l = p.suspension;
  const double s = std::sin(theta);
  return p.damping * r * r * l * l * s * s / (r * r + l * l - 2.0 * r * l * std::cos(theta)) * theta_dot;
}

std::array<double, 2> dynamics(double, std::span<const double> state, double u, double rest,
                               const Params& p) {
  const double theta = state[0];
  const double theta_dot = state[1];
  return {theta_dot,
          (u - spring_torque(theta, rest, p) - damper_torque(theta, theta_dot, p)) / p.inertia};
}

double rest_angle(double omega) { return pi / 2.0 + omega * pi / 4.0; }

ParameterSpace rest_angle_space() { return ParameterSpace({Distribution::uniform(-1.0, 1.0)}); }

ReferencePoint reference_trajectory(double t) {
  if (t < 2.0) return {pi / 8.0 * t * t + pi / 2.0, pi / 4.0 * t, pi / 4.0};
  return {pi / 2.0 * t, pi / 2.0, 0.0};
}

double scenario_input(int scenario, double t) {
  if (t < 0.0) return 0.0;
  switch (scenario) {
    case 1: return 0.5;
    case 2: return 1.0;
  }
  throw DomainError("scenario must be 1 or 2, got " + std::to_string(scenario));
}

UncertainOde make_ode(std::function<double(double)> input, const Params& params, double horizon) {
  params.validate();
  UncertainOde ode;
  ode.state_dim = 2;
  ode.horizon = horizon;
  ode.initial = [](std::span<const double> omega, std::span<double> x0) {
    x0[0] = rest_angle(omega[0]);
    x0[1] = 0.0;
  };
  ode.dynamics = [input = std::move(input), params](double t, std::span<const double> x,
                                                    std::span<const double> omega, std::span<double> dx) {
    const auto d = dynamics(t, x, input(t), rest_angle(omega[0]), params);
    dx[0] = d[0];
    dx[1] = d[1];
  };
  return ode;
}

UncertainOde scenario_ode(int scenario, const Params& params, double horizon) {
  scenario_input(scenario, 0.0);  // validates the scenario id
  return make_ode([scenario](double t) { return scenario_input(scenario, t); }, params, horizon);
}

double computed_torque(double t, const Params& params) {
  const auto ref = reference_trajectory(t);
  return params.inertia * ref.acceleration + spring_torque(ref.angle, rest_angle(0.0), params) +
         damper_torque(ref.angle, ref.rate, params);
}

}  // namespace pcesocp::drivetrain
