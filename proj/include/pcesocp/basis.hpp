#pragma once

// Orthogonal polynomial bases for independent random inputs (Wiener-Askey
// families) and the tensor-product multivariate basis built from them.
//
// Inner products are taken against the probability-normalized joint density,
// so the constant basis function has unit norm and its coefficient is the
// mean. Polynomials themselves are the classical (un-normalized) Legendre and
// probabilists' Hermite families; their squared norms are stored separately.

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pcesocp {

enum class Family { Uniform, Gaussian };

/// Parses "uniform" / "gaussian" (also "normal"); anything else throws
/// UnsupportedDistribution.
Family parse_family(std::string_view name);
std::string_view to_string(Family family);

/// Marginal distribution of one input. For Uniform, (first, second) = (a, b);
/// for Gaussian, (first, second) = (mean, standard deviation).
struct Distribution {
  Family family = Family::Uniform;
  double first = -1.0;
  double second = 1.0;

  static Distribution uniform(double a, double b);
  static Distribution gaussian(double mean, double stddev);

  /// Maps a physical value onto the canonical variable of the family
  /// ([-1, 1] for Legendre, standard normal for Hermite).
  double to_canonical(double value) const;
  double from_canonical(double canonical) const;
  /// Inverse CDF of the marginal, p in (0, 1) ([0, 1] for Uniform).
  double quantile(double p) const;
  double pdf(double value) const;
  bool contains(double value) const;
  /// Support endpoints; infinite for Gaussian.
  double lower() const;
  double upper() const;
};

/// Independent random inputs; the joint density is the product of marginals.
class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<Distribution> marginals);

  std::size_t dims() const { return marginals_.size(); }
  const Distribution& marginal(std::size_t k) const { return marginals_[k]; }
  const std::vector<Distribution>& marginals() const { return marginals_; }
  bool contains(std::span<const double> point) const;

 private:
  std::vector<Distribution> marginals_;
};

/// Value of the degree-n univariate family polynomial at a canonical point,
/// by three-term recurrence.
double univariate_eval(Family family, int degree, double canonical_point);

/// All values Phi_0..Phi_max_degree at a canonical point.
void univariate_eval_all(Family family, int max_degree, double canonical_point,
                         std::span<double> out);

/// Squared norm of Phi_n under the normalized measure: 1/(2n+1) for Legendre,
/// n! for probabilists' Hermite.
double univariate_squared_norm(Family family, int degree);

using MultiIndex = std::vector<int>;

/// Multi-indices with |i| <= degree in graded lexicographic order: grade
/// ascending, and within a grade the first component descending
/// (so for two inputs and degree 1: (0,0), (1,0), (0,1)).
std::vector<MultiIndex> graded_multi_indices(std::size_t dims, int degree);

/// C(dims + degree, dims).
std::size_t basis_size(std::size_t dims, int degree);

class PolynomialBasis {
 public:
  PolynomialBasis(ParameterSpace space, int degree);

  const ParameterSpace& space() const { return space_; }
  int degree() const { return degree_; }
  std::size_t size() const { return indices_.size(); }
  const std::vector<MultiIndex>& multi_indices() const { return indices_; }

  /// <Psi_i^2> for every basis function; entry 0 is 1.
  const Eigen::VectorXd& squared_norms() const { return norms_; }
  /// Gram matrix D = diag(<Psi_i^2>).
  Eigen::MatrixXd gram() const { return norms_.asDiagonal(); }

  /// Basis values at a physical point; throws ShapeError on dimension mismatch.
  Eigen::VectorXd eval(std::span<const double> point) const;
  void eval(std::span<const double> point, std::span<double> out) const;

  /// Row j holds the basis evaluated at row j of `points` (q x n_omega).
  Eigen::MatrixXd vandermonde(const Eigen::MatrixXd& points) const;

 private:
  ParameterSpace space_;
  int degree_;
  std::vector<MultiIndex> indices_;
  Eigen::VectorXd norms_;
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Mean and covariance of x(omega) = sum_i coeffs.row(i) * Psi_i(omega) for a
/// p x n coefficient block.
Moments moments_from_coefficients(const PolynomialBasis& basis,
                                  const Eigen::MatrixXd& coeffs);

}  // namespace pcesocp
