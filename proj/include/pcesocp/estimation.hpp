#pragma once

// Non-intrusive estimators of chaos coefficients. Each one is a linear map A
// (p x q) from collocation samples to coefficients, applied column-wise to
// multi-output samples.

#include <string_view>

#include <Eigen/Dense>

#include "pcesocp/basis.hpp"
#include "pcesocp/quadrature.hpp"

namespace pcesocp {

enum class EstimatorKind {
  Projection,            ///< A = D^-1 Psi^T W
  LeastSquares,          ///< A = (Psi^T Psi)^-1 Psi^T
  GeneralizedLeastSquares  ///< A = (Psi^T W Psi)^-1 Psi^T W
};

EstimatorKind parse_estimator(std::string_view name);
std::string_view to_string(EstimatorKind kind);

class EstimatorMap {
 public:
  /// Throws MissingWeights (PM/GLS without weights) or IllPosedDesign
  /// (q < p or rank-deficient Vandermonde matrix).
  EstimatorMap(PolynomialBasis basis, CollocationSet collocation, EstimatorKind kind);

  EstimatorKind kind() const { return kind_; }
  const PolynomialBasis& basis() const { return basis_; }
  const CollocationSet& collocation() const { return collocation_; }
  /// p x q.
  const Eigen::MatrixXd& matrix() const { return map_; }
  /// q x p Vandermonde matrix, Psi(j, i) = Psi_i(omega_j).
  const Eigen::MatrixXd& vandermonde() const { return psi_; }

  std::size_t nodes() const { return static_cast<std::size_t>(map_.cols()); }
  std::size_t terms() const { return static_cast<std::size_t>(map_.rows()); }

 private:
  PolynomialBasis basis_;
  CollocationSet collocation_;
  EstimatorKind kind_;
  Eigen::MatrixXd psi_;
  Eigen::MatrixXd map_;
};

/// p x n coefficient block from q x n samples (row j = response at node j).
Eigen::MatrixXd estimate_coefficients(const EstimatorMap& map, const Eigen::MatrixXd& samples);

}  // namespace pcesocp
