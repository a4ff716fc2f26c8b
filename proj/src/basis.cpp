#include "pcesocp/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "pcesocp/errors.hpp"

namespace pcesocp {

Family parse_family(std::string_view name) {
  if (name == "uniform") return Family::Uniform;
  if (name == "gaussian" || name == "normal") return Family::Gaussian;
  throw UnsupportedDistribution("unsupported distribution '" + std::string(name) + "'");
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Uniform: return "uniform";
    case Family::Gaussian: return "gaussian";
  }
  throw UnsupportedDistribution("unsupported distribution tag");
}

Distribution Distribution::uniform(double a, double b) {
  if (!(a < b)) throw DomainError("uniform distribution requires a < b");
  return {Family::Uniform, a, b};
}

Distribution Distribution::gaussian(double mean, double stddev) {
  if (!(stddev > 0.0)) throw DomainError("gaussian distribution requires sigma > 0");
  return {Family::Gaussian, mean, stddev};
}

double Distribution::to_canonical(double value) const {
  switch (family) {
    case Family::Uniform: return (2.0 * value - first - second) / (second - first);
    case Family::Gaussian: return (value - first) / second;
  }
  throw UnsupportedDistribution("unsupported distribution tag");
}

double Distribution::from_canonical(double canonical) const {
  switch (family) {
    case Family::Uniform: return 0.5 * (first + second) + 0.5 * (second - first) * canonical;
    case Family::Gaussian: return first + second * canonical;
  }
  throw UnsupportedDistribution("unsupported distribution tag");
}

double Distribution::quantile(double p) const {
  switch (family) {
    case Family::Uniform: return first + p * (second - first);
    case Family::Gaussian: {
      if (!(p > 0.0 && p < 1.0)) throw DomainError("gaussian quantile requires 0 < p < 1");
      const boost::math::normal_distribution<double> normal(first, second);
      return boost::math::quantile(normal, p);
    }
  }
  throw UnsupportedDistribution("unsupported distribution tag");
}

double Distribution::pdf(double value) const {
  switch (family) {
    case Family::Uniform: return contains(value) ? 1.0 / (second - first) : 0.0;
    case Family::Gaussian: {
      const double z = (value - first) / second;
      return std::exp(-0.5 * z * z) / (second * std::sqrt(2.0 * std::numbers::pi));
    }
  }
  throw UnsupportedDistribution("unsupported distribution tag");
}

bool Distribution::contains(double value) const {
  if (family == Family::Uniform) return value >= first && value <= second;
  return std::isfinite(value);
}

double Distribution::lower() const {
  return family == Family::Uniform ? first : -std::numeric_limits<double>::infinity();
}

double Distribution::upper() const {
  return family == Family::Uniform ? second : std::numeric_limits<double>::infinity();
}

ParameterSpace::ParameterSpace(std::vector<Distribution> marginals)
    : marginals_(std::move(marginals)) {
  if (marginals_.empty()) throw ShapeError("parameter space needs at least one dimension");
  for (const auto& m : marginals_) {
    if (m.family == Family::Uniform && !(m.first < m.second))
      throw DomainError("uniform distribution requires a < b");
    if (m.family == Family::Gaussian && !(m.second > 0.0))
      throw DomainError("gaussian distribution requires sigma > 0");
  }
}

bool ParameterSpace::contains(std::span<const double> point) const {
  if (point.size() != dims()) return false;
  for (std::size_t k = 0; k < dims(); ++k)
    if (!marginals_[k].contains(point[k])) return false;
  return true;
}

void univariate_eval_all(Family family, int max_degree, double x, std::span<double> out) {
  if (max_degree < 0) throw DomainError("polynomial degree must be non-negative");
  if (out.size() < static_cast<std::size_t>(max_degree) + 1)
    throw ShapeError("output span too small for requested degree");
  out[0] = 1.0;
  if (max_degree == 0) return;
  out[1] = x;
  switch (family) {
    case Family::Uniform:
      // (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}
      for (int n = 1; n < max_degree; ++n)
        out[n + 1] = ((2.0 * n + 1.0) * x * out[n] - n * out[n - 1]) / (n + 1.0);
      return;
    case Family::Gaussian:
      // He_{n+1} = x He_n - n He_{n-1}
      for (int n = 1; n < max_degree; ++n) out[n + 1] = x * out[n] - n * out[n - 1];
      return;
  }
  throw UnsupportedDistribution("unsupported distribution tag");
}

double univariate_eval(Family family, int degree, double x) {
  if (degree < 0) throw DomainError("polynomial degree must be non-negative");
  if (family == Family::Uniform && std::abs(x) > 1.0 + 1e-12)
    throw DomainError("Legendre argument outside [-1, 1]");
  std::vector<double> values(static_cast<std::size_t>(degree) + 1);
  univariate_eval_all(family, degree, x, values);
  return values.back();
}

double univariate_squared_norm(Family family, int degree) {
  switch (family) {
    case Family::Uniform: return 1.0 / (2.0 * degree + 1.0);
    case Family::Gaussian: return std::tgamma(degree + 1.0);
  }
  throw UnsupportedDistribution("unsupported distribution tag");
}

namespace {

void append_grade(std::size_t dims, int remaining, std::size_t pos, MultiIndex& current,
                  std::vector<MultiIndex>& out) {
  if (pos + 1 == dims) {
    current[pos] = remaining;
    out.push_back(current);
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    current[pos] = v;
    append_grade(dims, remaining - v, pos + 1, current, out);
  }
}

}  // namespace

std::vector<MultiIndex> graded_multi_indices(std::size_t dims, int degree) {
  if (dims == 0) throw ShapeError("multi-indices need at least one dimension");
  if (degree < 0) throw DomainError("total degree must be non-negative");
  std::vector<MultiIndex> out;
  out.reserve(basis_size(dims, degree));
  MultiIndex current(dims, 0);
  for (int grade = 0; grade <= degree; ++grade) append_grade(dims, grade, 0, current, out);
  return out;
}

std::size_t basis_size(std::size_t dims, int degree) {
  // C(dims + degree, dims) built incrementally; each partial product is an
  // exact binomial coefficient.
  std::size_t result = 1;
  for (std::size_t k = 1; k <= dims; ++k)
    result = result * (static_cast<std::size_t>(degree) + k) / k;
  return result;
}

PolynomialBasis::PolynomialBasis(ParameterSpace space, int degree)
    : space_(std::move(space)), degree_(degree) {
  indices_ = graded_multi_indices(space_.dims(), degree_);
  norms_.resize(static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    double norm = 1.0;
    for (std::size_t k = 0; k < space_.dims(); ++k)
      norm *= univariate_squared_norm(space_.marginal(k).family, indices_[i][k]);
    norms_[static_cast<Eigen::Index>(i)] = norm;
  }
}

void PolynomialBasis::eval(std::span<const double> point, std::span<double> out) const {
  const std::size_t dims = space_.dims();
  if (point.size() != dims)
    throw ShapeError("point has " + std::to_string(point.size()) + " entries, expected " +
                     std::to_string(dims));
  if (out.size() != size()) throw ShapeError("output span does not match basis size");

  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  std::vector<double> table(dims * stride);
  for (std::size_t k = 0; k < dims; ++k) {
    const auto& marginal = space_.marginal(k);
    univariate_eval_all(marginal.family, degree_, marginal.to_canonical(point[k]),
                        std::span<double>(table).subspan(k * stride, stride));
  }
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    double value = 1.0;
    for (std::size_t k = 0; k < dims; ++k)
      value *= table[k * stride + static_cast<std::size_t>(indices_[i][k])];
    out[i] = value;
  }
}

Eigen::VectorXd PolynomialBasis::eval(std::span<const double> point) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  eval(point, std::span<double>(out.data(), size()));
  return out;
}

Eigen::MatrixXd PolynomialBasis::vandermonde(const Eigen::MatrixXd& points) const {
  if (static_cast<std::size_t>(points.cols()) != space_.dims())
    throw ShapeError("collocation points have wrong dimension");
  Eigen::MatrixXd psi(points.rows(), static_cast<Eigen::Index>(size()));
  std::vector<double> point(space_.dims());
  std::vector<double> row(size());
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    for (std::size_t k = 0; k < point.size(); ++k) point[k] = points(j, static_cast<Eigen::Index>(k));
    eval(point, row);
    for (std::size_t i = 0; i < row.size(); ++i) psi(j, static_cast<Eigen::Index>(i)) = row[i];
  }
  return psi;
}

Moments moments_from_coefficients(const PolynomialBasis& basis, const Eigen::MatrixXd& coeffs) {
  if (static_cast<std::size_t>(coeffs.rows()) != basis.size())
    throw ShapeError("coefficient block has " + std::to_string(coeffs.rows()) +
                     " rows, basis has " + std::to_string(basis.size()));
  const auto& norms = basis.squared_norms();
  Moments m;
  m.mean = coeffs.row(0).transpose() * norms[0];
  m.covariance = Eigen::MatrixXd::Zero(coeffs.cols(), coeffs.cols());
  for (Eigen::Index i = 1; i < coeffs.rows(); ++i)
    m.covariance.noalias() += norms[i] * coeffs.row(i).transpose() * coeffs.row(i);
  return m;
}

}  // namespace pcesocp
