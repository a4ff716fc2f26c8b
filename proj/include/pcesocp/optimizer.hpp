#pragma once

// Projected quasi-Newton (BFGS) minimization over a box, with backtracking
// along the projection arc.

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pcesocp {

enum class StopReason {
  Converged,          ///< projected-gradient infinity norm <= tolerance
  FunctionTolerance,  ///< relative decrease of the objective below tolerance
  IterationCap,
  LineSearchFailure   ///< no sufficient decrease even along steepest descent
};

std::string_view to_string(StopReason reason);

struct BoxOptions {
  std::size_t max_iterations = 200;
  double pg_tolerance = 1e-6;
  /// Relative decrease per iteration under which the run stops; 0 disables.
  double f_tolerance = 0.0;
  double armijo = 1e-4;
  double backtrack = 0.5;
  std::size_t max_backtracks = 40;
  /// Cap on the infinity norm of the first trial step.
  double initial_step = 1.0;
};

struct Iterate {
  std::size_t iteration;
  std::size_t evaluations;
  double value;
  double pg_norm;
  Eigen::VectorXd x;
};

struct BoxResult {
  Eigen::VectorXd x;
  double value;
  double pg_norm;
  StopReason reason;
  std::size_t iterations;
  std::size_t evaluations;
  /// Accepted iterates, starting with the (projected) initial point.
  std::vector<Iterate> log;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Infinity norm of x - P(x - g).
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

/// Minimizes f over lower <= x <= upper starting from the projection of x0.
/// Throws InvalidStart if f(x0) is not finite. Non-finite trial values are
/// treated as failed line-search trials.
BoxResult minimize_box(const Objective& f, const Gradient& grad, const Eigen::VectorXd& x0,
                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                       const BoxOptions& options = {});

}  // namespace pcesocp
