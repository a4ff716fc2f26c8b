#pragma once

// Robustified quadratic-tracking optimal control in the chaos-coefficient
// domain. The stochastic objective
//
//   K = int eps |X - R|^2_{D (x) Q} + (1 - eps) |X|^2_{E (x) I} dt + eps |U|^2_{M (x) R}
//
// (R = e1 (x) r, E = D - e1 e1^T) weights the expected tracking cost against
// the integrated state variance. Controls are continuous piecewise-linear on
// a uniform grid, so the control energy is an exact quadratic form in the
// node values U with the hat-function Gram matrix M.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pcesocp/optimizer.hpp"
#include "pcesocp/propagation.hpp"

namespace pcesocp {

/// Piecewise-linear control on n_t uniform intervals of [0, horizon].
/// Node values are stored flat as U = [u_0; ...; u_nt], each u_k in R^n_u.
struct ControlGrid {
  double horizon = 10.0;
  std::size_t intervals = 40;
  std::size_t channels = 1;
  Eigen::VectorXd lower;  ///< per channel
  Eigen::VectorXd upper;  ///< per channel

  static ControlGrid uniform(double horizon, std::size_t intervals, double lower, double upper);

  double spacing() const { return horizon / static_cast<double>(intervals); }
  std::size_t node_count() const { return intervals + 1; }
  std::size_t parameter_count() const { return node_count() * channels; }
  double node_time(std::size_t k) const { return static_cast<double>(k) * spacing(); }

  /// Bounds expanded to the flat parameter vector.
  Eigen::VectorXd flat_lower() const;
  Eigen::VectorXd flat_upper() const;
  bool feasible(const Eigen::VectorXd& u) const;
  void validate() const;
};

/// u(t; U); throws DomainError for t outside [0, horizon].
Eigen::VectorXd control_eval(const ControlGrid& grid, const Eigen::VectorXd& nodes, double t);
void control_eval(const ControlGrid& grid, std::span<const double> nodes, double t, std::span<double> out);

/// (intervals + 1)^2 Gram matrix of the hat functions: spacing/6 tridiag(1, [2 4 ... 4 2], 1).
Eigen::MatrixXd build_m(std::size_t intervals, double spacing);

/// D - e1 e1^T for a normalized basis.
Eigen::MatrixXd build_e(const PolynomialBasis& basis);

struct CostWeights {
  Eigen::MatrixXd state_weight;    ///< Q, n_x x n_x SPD
  Eigen::MatrixXd control_weight;  ///< R, n_u x n_u SPD
  double epsilon = 1.0;            ///< in (0, 1]
  std::function<Eigen::VectorXd(double)> reference;

  void validate() const;
};

struct CostBreakdown {
  double tracking = 0.0;    ///< int |X - R|^2_{D (x) Q}
  double covariance = 0.0;  ///< int |X|^2_{E (x) I}
  double control = 0.0;     ///< |U|^2_{M (x) R}
  double total = 0.0;       ///< eps tracking + (1 - eps) covariance + eps control
};

/// Integrand of the state part of K at one time: eps |X - R|^2_{D (x) Q} +
/// (1 - eps) |X|^2_{E (x) I} for a p x n_x coefficient block.
double cost_integrand(const Eigen::MatrixXd& block, const Eigen::VectorXd& reference,
                      const CostWeights& weights, const PolynomialBasis& basis);

/// K for a coefficient field and control vector; the time integral is the
/// trapezoid rule on the field's stored grid. Throws ShapeError when the field
/// does not span the control horizon or sizes disagree.
CostBreakdown stochastic_cost(const CoefficientField& field, const ControlGrid& grid,
                              const Eigen::VectorXd& controls, const CostWeights& weights,
                              const PolynomialBasis& basis);

/// Uncertain dynamics with an input: dx/dt = f(x, u, omega), x(0) = h(omega).
struct ControlledOde {
  std::size_t state_dim = 1;
  std::size_t control_dim = 1;
  std::function<void(std::span<const double> omega, std::span<double> x0)> initial;
  std::function<void(std::span<const double> x, std::span<const double> u, std::span<const double> omega,
                     std::span<double> dxdt)>
      dynamics;
};

/// Closes the dynamics over u(t; U).
UncertainOde close_loop(const ControlledOde& ode, const ControlGrid& grid, Eigen::VectorXd controls);

struct StochasticOcp {
  ControlledOde ode;
  ControlGrid controls;
  CostWeights weights;
  EstimatorMap estimator;
  Coupling coupling = Coupling::Decoupled;
  TimeGrid time_grid;

  void validate() const;
};

struct OcpEvaluation {
  /// +infinity when the propagation diverged.
  double cost;
  CostBreakdown breakdown;
  CoefficientField field;
  bool diverged = false;
};

/// Throws DomainError if U violates the bounds.
OcpEvaluation evaluate_ocp(const StochasticOcp& ocp, const Eigen::VectorXd& controls);

enum class DifferenceScheme { Forward, Central };

/// Finite-difference gradient of K with per-coordinate step
/// relative_step * max(1, |U_i|), kept inside the bounds. Evaluations run on
/// up to `threads` workers.
Eigen::VectorXd ocp_gradient(const StochasticOcp& ocp, const Eigen::VectorXd& controls,
                             DifferenceScheme scheme = DifferenceScheme::Forward,
                             double relative_step = 1e-7, std::size_t threads = 0);

struct SolveOptions {
  BoxOptions box;
  DifferenceScheme scheme = DifferenceScheme::Forward;
  double relative_step = 1e-7;
  /// 0 = hardware concurrency.
  std::size_t threads = 0;
};

struct OcpSolution {
  Eigen::VectorXd controls;
  double cost;
  double pg_norm;
  StopReason reason;
  std::size_t iterations;
  std::size_t evaluations;
  std::vector<Iterate> log;
};

/// Minimizes K over the control box starting from U0. Throws InvalidStart if
/// K(U0) is not finite.
OcpSolution solve_ocp(const StochasticOcp& ocp, const Eigen::VectorXd& initial,
                      const SolveOptions& options = {});

}  // namespace pcesocp
