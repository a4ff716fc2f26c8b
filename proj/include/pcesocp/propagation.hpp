#pragma once

// Uncertainty propagation through ODEs with parameter-dependent dynamics and
// initial state. The decoupled method simulates every collocation node and
// maps the stacked states to coefficients; the coupled method integrates the
// coefficient ODE directly.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pcesocp/estimation.hpp"

namespace pcesocp {

/// Uniform integration grid on [0, steps * dt]; states are stored every
/// `store_every` steps (the final time is always a storage point, so steps
/// must be a multiple of store_every).
struct TimeGrid {
  double dt = 1e-3;
  std::size_t steps = 10000;
  std::size_t store_every = 10;

  static TimeGrid over(double horizon, double dt, std::size_t store_every = 10);

  double horizon() const { return dt * static_cast<double>(steps); }
  std::size_t stored_points() const { return steps / store_every + 1; }
  std::vector<double> stored_times() const;
  void validate() const;
};

using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

struct Trajectory {
  std::vector<double> times;
  /// One row per stored time.
  Eigen::MatrixXd states;
};

/// Classical fixed-step RK4. Throws DivergenceError at the first non-finite
/// state.
Trajectory integrate_ode(const OdeRhs& rhs, std::span<const double> x0, const TimeGrid& grid);

struct UncertainOde {
  std::size_t state_dim = 1;
  double horizon = 10.0;
  /// x(0, omega).
  std::function<void(std::span<const double> omega, std::span<double> x0)> initial;
  /// dx/dt = f(t, x, omega).
  std::function<void(double t, std::span<const double> x, std::span<const double> omega,
                     std::span<double> dxdt)>
      dynamics;
};

enum class Coupling { Decoupled, Coupled };

Coupling parse_coupling(std::string_view name);
std::string_view to_string(Coupling coupling);

struct CoefficientField {
  std::vector<double> times;
  /// One p x n_x block per stored time.
  std::vector<Eigen::MatrixXd> blocks;

  std::size_t terms() const { return blocks.empty() ? 0 : static_cast<std::size_t>(blocks.front().rows()); }
  std::size_t state_dim() const { return blocks.empty() ? 0 : static_cast<std::size_t>(blocks.front().cols()); }
};

/// Simulates each node independently and maps the stacked states through A.
/// Throws DivergenceError annotated with the node index.
CoefficientField propagate_decoupled(const UncertainOde& ode, const EstimatorMap& map,
                                     const TimeGrid& grid);

/// Integrates dX/dt = A [f(t, Psi(omega_j) X, omega_j)]_j from X(0) = A H.
CoefficientField propagate_coupled(const UncertainOde& ode, const EstimatorMap& map,
                                   const TimeGrid& grid);

CoefficientField propagate(const UncertainOde& ode, const EstimatorMap& map, const TimeGrid& grid,
                           Coupling coupling);

/// Sampled surface x(t, omega_s): trajectories of N parameter points on a
/// common time grid.
struct ReferenceSurface {
  std::vector<double> times;
  /// N x n_omega.
  Eigen::MatrixXd points;
  /// One (times x n_x) matrix per point.
  std::vector<Eigen::MatrixXd> states;
};

/// Evaluates the chaos surrogate at `points` for every stored time; the result
/// has the layout of a ReferenceSurface.
ReferenceSurface reconstruct_surface(const CoefficientField& field, const PolynomialBasis& basis,
                                     const Eigen::MatrixXd& points);

/// Root mean squared difference over the whole (t, omega) grid between the
/// surrogate and the reference for one state component. Throws ShapeError if
/// the time grids differ.
double surface_rmse(const CoefficientField& field, const PolynomialBasis& basis,
                    const ReferenceSurface& reference, std::size_t state_index);

}  // namespace pcesocp
