#pragma once

// Sampling oracle for the uncertain ODE: Monte Carlo draws or a deterministic
// parameter grid, simulated node by node, reduced to moments and percentile
// bands.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pcesocp/propagation.hpp"

namespace pcesocp {

enum class SamplingMode { MonteCarlo, Grid };

SamplingMode parse_sampling_mode(std::string_view name);
std::string_view to_string(SamplingMode mode);

struct SampleEnsemble {
  SamplingMode mode = SamplingMode::Grid;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  /// Sample points and trajectories; a diverged sample's trajectory is all NaN.
  ReferenceSurface surface;
  std::vector<bool> diverged;
  /// Sample weights summing to one: 1/N for Monte Carlo, tensor trapezoid
  /// weights on the grid (midpoint weights along unbounded axes).
  Eigen::VectorXd weights;

  std::size_t converged_count() const;
};

/// Grid mode uses the endpoint-inclusive uniform design (bounded marginals)
/// or mid-probability quantiles (unbounded); MonteCarlo draws by inverse CDF
/// from a SplitMix64 stream seeded with `seed`. Throws DomainError if count < 2.
SampleEnsemble sample_ensemble(const UncertainOde& ode, const ParameterSpace& space, std::size_t count,
                               SamplingMode mode, std::uint64_t seed, const TimeGrid& grid);

struct EnsembleMoments {
  std::vector<double> times;
  /// times x n_x.
  Eigen::MatrixXd mean;
  /// One n_x x n_x unbiased covariance per time.
  std::vector<Eigen::MatrixXd> covariance;
  /// Empirical 0.5 % and 99.5 % percentiles, times x n_x.
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
};

/// Reduces the non-diverged samples with their renormalized weights; the
/// covariance carries the 1 / (1 - sum w^2) correction, which is the usual
/// unbiased estimator for equal weights. Throws EmptyEnsemble when fewer than
/// two samples remain.
EnsembleMoments ensemble_moments(const SampleEnsemble& ensemble, double lower_probability = 0.005,
                                 double upper_probability = 0.995);

/// Linear-interpolation empirical quantile of unsorted values (type 7).
double empirical_quantile(std::vector<double> values, double probability);

}  // namespace pcesocp
