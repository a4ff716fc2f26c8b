#pragma once

// Collocation sets: tensor-product Gauss rules matched to each marginal, and
// weightless designs (uniform grid, Latin hypercube) for regression.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "pcesocp/basis.hpp"

namespace pcesocp {

enum class DesignKind { GaussTensor, UniformGrid, LatinHypercube };

std::string_view to_string(DesignKind kind);

struct CollocationSet {
  /// q x n_omega, physical units.
  Eigen::MatrixXd nodes;
  /// Normalized quadrature weights (sum to 1), absent for regression designs.
  std::optional<Eigen::VectorXd> weights;
  DesignKind kind = DesignKind::GaussTensor;

  std::size_t size() const { return static_cast<std::size_t>(nodes.rows()); }
  std::size_t dims() const { return static_cast<std::size_t>(nodes.cols()); }
  bool has_weights() const { return weights.has_value(); }
  Eigen::VectorXd node(std::size_t j) const { return nodes.row(static_cast<Eigen::Index>(j)).transpose(); }

  /// Same nodes with the weights dropped.
  CollocationSet without_weights() const;
};

/// Nodes and normalized weights of the m-point Gauss rule for one marginal,
/// by Golub-Welsch on the family's Jacobi matrix.
void gauss_rule_1d(const Distribution& marginal, std::size_t m, Eigen::VectorXd& nodes,
                   Eigen::VectorXd& weights);

/// Tensor-product Gauss rule with m points per dimension (q = m^n_omega),
/// exact for per-dimension degree <= 2m - 1.
CollocationSet gauss_rule(const ParameterSpace& space, std::size_t points_per_dim);

/// Weightless design of q nodes, deterministic in `seed`.
///
/// UniformGrid: in 1-D an endpoint-inclusive grid for bounded marginals and
/// mid-probability quantiles (j + 1/2)/q for unbounded ones; in n-D the tensor
/// grid of m = q^(1/n) points per axis, so q must be a perfect power.
/// LatinHypercube: one node in each of the q equal-probability strata of every
/// axis, jittered uniformly inside the stratum.
CollocationSet design_nodes(const ParameterSpace& space, std::size_t q, DesignKind kind,
                            std::uint64_t seed = 0);

/// sum_j f(omega_j) w_j; throws MissingWeights for weightless sets.
double integrate(const CollocationSet& rule, const std::function<double(std::span<const double>)>& f);

}  // namespace pcesocp
