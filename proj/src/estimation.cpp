#include "pcesocp/estimation.hpp"

#include <string>

#include "pcesocp/errors.hpp"

namespace pcesocp {

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "pm") return EstimatorKind::Projection;
  if (name == "ls") return EstimatorKind::LeastSquares;
  if (name == "gls") return EstimatorKind::GeneralizedLeastSquares;
  throw DomainError("unknown estimator '" + std::string(name) + "' (expected pm, ls or gls)");
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Projection: return "pm";
    case EstimatorKind::LeastSquares: return "ls";
    case EstimatorKind::GeneralizedLeastSquares: return "gls";
  }
  return "unknown";
}

namespace {

// Pseudo-inverse of a full-column-rank matrix via column-pivoted QR.
Eigen::MatrixXd solve_least_squares(const Eigen::MatrixXd& design) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols())
    throw IllPosedDesign("collocation design is rank deficient (rank " + std::to_string(qr.rank()) +
                         " < p = " + std::to_string(design.cols()) + ")");
  return qr.solve(Eigen::MatrixXd::Identity(design.rows(), design.rows()));
}

}  // namespace

EstimatorMap::EstimatorMap(PolynomialBasis basis, CollocationSet collocation, EstimatorKind kind)
    : basis_(std::move(basis)), collocation_(std::move(collocation)), kind_(kind) {
  if (collocation_.dims() != basis_.space().dims())
    throw ShapeError("collocation set dimension does not match the parameter space");
  const auto q = static_cast<Eigen::Index>(collocation_.size());
  const auto p = static_cast<Eigen::Index>(basis_.size());
  if (kind_ != EstimatorKind::LeastSquares && !collocation_.has_weights())
    throw MissingWeights(std::string(to_string(kind_)) + " estimator needs quadrature weights");
  if (q < p)
    throw IllPosedDesign("q = " + std::to_string(q) + " collocation nodes for p = " +
                         std::to_string(p) + " basis terms");

  psi_ = basis_.vandermonde(collocation_.nodes);

  switch (kind_) {
    case EstimatorKind::Projection: {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(psi_);
      if (qr.rank() < p) throw IllPosedDesign("collocation design is rank deficient");
      const auto& w = *collocation_.weights;
      map_ = basis_.squared_norms().cwiseInverse().asDiagonal() * psi_.transpose() * w.asDiagonal();
      break;
    }
    case EstimatorKind::LeastSquares:
      map_ = solve_least_squares(psi_);
      break;
    case EstimatorKind::GeneralizedLeastSquares: {
      const Eigen::VectorXd sqrt_w = collocation_.weights->cwiseSqrt();
      map_ = solve_least_squares(sqrt_w.asDiagonal() * psi_) * sqrt_w.asDiagonal();
      break;
    }
  }
}

Eigen::MatrixXd estimate_coefficients(const EstimatorMap& map, const Eigen::MatrixXd& samples) {
  if (static_cast<std::size_t>(samples.rows()) != map.nodes())
    throw ShapeError("sample block has " + std::to_string(samples.rows()) + " rows, expected q = " +
                     std::to_string(map.nodes()));
  return map.matrix() * samples;
}

}  // namespace pcesocp
