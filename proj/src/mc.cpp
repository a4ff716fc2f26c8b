#include "pcesocp/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcesocp/errors.hpp"
#include "pcesocp/quadrature.hpp"
#include "pcesocp/rng.hpp"

namespace pcesocp {

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "mc") return SamplingMode::MonteCarlo;
  if (name == "grid") return SamplingMode::Grid;
  throw DomainError("unknown sampling mode '" + std::string(name) + "' (expected mc or grid)");
}

std::string_view to_string(SamplingMode mode) { return mode == SamplingMode::Grid ? "grid" : "mc"; }

std::size_t SampleEnsemble::converged_count() const {
  return static_cast<std::size_t>(std::count(diverged.begin(), diverged.end(), false));
}

namespace {

// Endpoint-inclusive grids integrate with the trapezoid rule; the
// mid-probability grid of an unbounded axis is already a midpoint rule.
// Ordering matches the tensor design: first axis slowest.
Eigen::VectorXd grid_weights(const ParameterSpace& space, std::size_t count) {
  const std::size_t dims = space.dims();
  const auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(count), 1.0 / static_cast<double>(dims))));
  std::vector<Eigen::VectorXd> axis(dims);
  for (std::size_t k = 0; k < dims; ++k) {
    axis[k] = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), 1.0);
    if (space.marginal(k).family == Family::Uniform && m > 1) {
      axis[k][0] = 0.5;
      axis[k][static_cast<Eigen::Index>(m - 1)] = 0.5;
    }
    axis[k] /= axis[k].sum();
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(count));
  for (std::size_t s = 0; s < count; ++s) {
    double v = 1.0;
    std::size_t rest = s;
    for (std::size_t k = dims; k-- > 0;) {
      v *= axis[k][static_cast<Eigen::Index>(rest % m)];
      rest /= m;
    }
    w[static_cast<Eigen::Index>(s)] = v;
  }
  return w;
}

}  // namespace

SampleEnsemble sample_ensemble(const UncertainOde& ode, const ParameterSpace& space, std::size_t count,
                               SamplingMode mode, std::uint64_t seed, const TimeGrid& grid) {
  if (count < 2) throw DomainError("an ensemble needs at least two samples");
  SampleEnsemble ens;
  ens.mode = mode;
  ens.count = count;
  ens.seed = seed;

  Eigen::MatrixXd points;
  if (mode == SamplingMode::Grid) {
    points = design_nodes(space, count, DesignKind::UniformGrid).nodes;
    ens.weights = grid_weights(space, count);
  } else {
    ens.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(count), 1.0 / static_cast<double>(count));
    SplitMix64 rng(seed);
    points.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(space.dims()));
    for (Eigen::Index s = 0; s < points.rows(); ++s)
      for (std::size_t k = 0; k < space.dims(); ++k)
        points(s, static_cast<Eigen::Index>(k)) = space.marginal(k).quantile(rng.uniform());
  }

  ens.surface.times = grid.stored_times();
  ens.surface.points = points;
  ens.surface.states.reserve(count);
  ens.diverged.assign(count, false);

  const std::size_t n = ode.state_dim;
  std::vector<double> omega(space.dims());
  std::vector<double> x0(n);
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t k = 0; k < omega.size(); ++k) omega[k] = points(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k));
    ode.initial(omega, x0);
    const OdeRhs rhs = [&ode, &omega](double t, std::span<const double> x, std::span<double> dx) {
      ode.dynamics(t, x, omega, dx);
    };
    try {
      ens.surface.states.push_back(integrate_ode(rhs, x0, grid).states);
    } catch (const DivergenceError& e) {
      ens.diverged[s] = true;
      Eigen::MatrixXd nan = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(ens.surface.times.size()),
                                                      static_cast<Eigen::Index>(n),
                                                      std::numeric_limits<double>::quiet_NaN());
      ens.surface.states.push_back(std::move(nan));
    }
  }
  return ens;
}

double empirical_quantile(std::vector<double> values, double probability) {
  if (values.empty()) throw EmptyEnsemble("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = probability * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

EnsembleMoments ensemble_moments(const SampleEnsemble& ens, double lower_probability, double upper_probability) {
  std::vector<std::size_t> alive;
  for (std::size_t s = 0; s < ens.diverged.size(); ++s)
    if (!ens.diverged[s]) alive.push_back(s);
  if (alive.size() < 2) throw EmptyEnsemble("fewer than two non-divergent samples");

  const auto nt = static_cast<Eigen::Index>(ens.surface.times.size());
  const auto n = ens.surface.states[alive.front()].cols();
  double total = 0.0;
  for (std::size_t s : alive) total += ens.weights[static_cast<Eigen::Index>(s)];
  std::vector<double> w(alive.size());
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < alive.size(); ++i) {
    w[i] = ens.weights[static_cast<Eigen::Index>(alive[i])] / total;
    sum_sq += w[i] * w[i];
  }

  EnsembleMoments m;
  m.times = ens.surface.times;
  m.mean = Eigen::MatrixXd::Zero(nt, n);
  m.lower.resize(nt, n);
  m.upper.resize(nt, n);
  m.covariance.assign(static_cast<std::size_t>(nt), Eigen::MatrixXd::Zero(n, n));

  for (std::size_t i = 0; i < alive.size(); ++i) m.mean += w[i] * ens.surface.states[alive[i]];

  std::vector<double> column(alive.size());
  for (Eigen::Index k = 0; k < nt; ++k) {
    auto& cov = m.covariance[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < alive.size(); ++i) {
      const Eigen::RowVectorXd d = ens.surface.states[alive[i]].row(k) - m.mean.row(k);
      cov.noalias() += w[i] * d.transpose() * d;
    }
    cov /= 1.0 - sum_sq;
    for (Eigen::Index c = 0; c < n; ++c) {
      for (std::size_t i = 0; i < alive.size(); ++i) column[i] = ens.surface.states[alive[i]](k, c);
      m.lower(k, c) = empirical_quantile(column, lower_probability);
      m.upper(k, c) = empirical_quantile(column, upper_probability);
    }
  }
  return m;
}

}  // namespace pcesocp
