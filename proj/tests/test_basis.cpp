#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pcesocp/basis.hpp"
#include "pcesocp/errors.hpp"
#include "pcesocp/estimation.hpp"
#include "pcesocp/quadrature.hpp"

using namespace pcesocp;

namespace {

ParameterSpace unit_uniform() { return ParameterSpace({Distribution::uniform(-1.0, 1.0)}); }

// Number of tuples in {0..d}^n with sum <= d, counted by brute force.
std::size_t count_multi_indices(std::size_t dims, int degree) {
  std::size_t count = 0;
  std::vector<int> idx(dims, 0);
  while (true) {
    int sum = 0;
    for (int v : idx) sum += v;
    if (sum <= degree) ++count;
    std::size_t k = 0;
    while (k < dims && ++idx[k] > degree) idx[k++] = 0;
    if (k == dims) break;
  }
  return count;
}

}  // namespace

TEST_CASE("univariate Legendre values") {
  CHECK(univariate_eval(Family::Uniform, 0, 0.7) == 1.0);
  CHECK(univariate_eval(Family::Uniform, 1, 0.5) == 0.5);
  // P2(x) = (3x^2 - 1)/2, P3(x) = (5x^3 - 3x)/2
  CHECK(univariate_eval(Family::Uniform, 2, 0.5) == doctest::Approx(-0.125).epsilon(1e-15));
  for (double x : {-1.0, -0.3, 0.0, 0.41, 1.0})
    CHECK(univariate_eval(Family::Uniform, 3, x) == doctest::Approx((5 * x * x * x - 3 * x) / 2).epsilon(1e-14));
}

TEST_CASE("univariate probabilists' Hermite values") {
  for (double x : {-2.5, -0.3, 0.0, 1.7}) {
    CHECK(univariate_eval(Family::Gaussian, 2, x) == doctest::Approx(x * x - 1));
    CHECK(univariate_eval(Family::Gaussian, 3, x) == doctest::Approx(x * x * x - 3 * x));
    CHECK(univariate_eval(Family::Gaussian, 4, x) == doctest::Approx(x * x * x * x - 6 * x * x + 3));
  }
}

TEST_CASE("unsupported families and bad arguments") {
  CHECK_THROWS_AS(parse_family("beta"), UnsupportedDistribution);
  CHECK(parse_family("uniform") == Family::Uniform);
  CHECK(parse_family("normal") == Family::Gaussian);
  CHECK_THROWS_AS(univariate_eval(static_cast<Family>(7), 2, 0.1), UnsupportedDistribution);
  CHECK_THROWS_AS(univariate_eval(Family::Uniform, -1, 0.1), DomainError);
  CHECK_THROWS_AS(univariate_eval(Family::Uniform, 2, 1.5), DomainError);
  CHECK_THROWS_AS(Distribution::uniform(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(ParameterSpace({}), ShapeError);
}

TEST_CASE("basis evaluation") {
  const PolynomialBasis b1(unit_uniform(), 2);
  const double half = 0.5;
  const auto v = b1.eval(std::span<const double>(&half, 1));
  REQUIRE(v.size() == 3);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.5);
  CHECK(v[2] == doctest::Approx(-0.125));

  const PolynomialBasis b2(ParameterSpace({Distribution::uniform(-1, 1), Distribution::uniform(-1, 1)}), 1);
  const std::vector<double> point{0.3, -0.7};
  const auto w = b2.eval(point);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == doctest::Approx(0.3));
  CHECK(w[2] == doctest::Approx(-0.7));

  CHECK_THROWS_AS(b2.eval(std::vector<double>{0.1}), ShapeError);
}

TEST_CASE("physical uniform support is mapped onto the Legendre interval") {
  const PolynomialBasis b(ParameterSpace({Distribution::uniform(2.0, 6.0)}), 2);
  const std::vector<double> point{5.0};  // canonical 0.5
  const auto v = b.eval(point);
  CHECK(v[1] == doctest::Approx(0.5));
  CHECK(v[2] == doctest::Approx(-0.125));
}

TEST_CASE("graded lexicographic multi-index order") {
  const auto idx = graded_multi_indices(2, 2);
  const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  CHECK(idx == expected);
  const auto idx3 = graded_multi_indices(3, 3);
  for (std::size_t i = 1; i < idx3.size(); ++i) {
    int g0 = 0, g1 = 0;
    for (int v : idx3[i - 1]) g0 += v;
    for (int v : idx3[i]) g1 += v;
    CHECK(g0 <= g1);
    if (g0 == g1) CHECK(idx3[i - 1] > idx3[i]);
  }
}

TEST_CASE("basis size matches enumeration") {
  for (std::size_t n = 1; n <= 4; ++n)
    for (int d = 0; d <= 8; ++d) {
      CHECK(basis_size(n, d) == count_multi_indices(n, d));
      CHECK(graded_multi_indices(n, d).size() == count_multi_indices(n, d));
    }
}

TEST_CASE("squared norms") {
  const PolynomialBasis b(unit_uniform(), 2);
  CHECK(b.squared_norms()[0] == 1.0);
  CHECK(b.squared_norms()[1] == doctest::Approx(1.0 / 3.0));
  CHECK(b.squared_norms()[2] == doctest::Approx(1.0 / 5.0));

  // <x^2 / 2> over [-1, 1] by a dense midpoint sum, independent of the recurrence.
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + (i + 0.5) * 2.0 / n;
    const double p2 = 0.5 * (3 * x * x - 1);
    sum += p2 * p2 * 0.5 * (2.0 / n);
  }
  CHECK(sum == doctest::Approx(b.squared_norms()[2]).epsilon(1e-8));
}

TEST_CASE("orthogonality and Gram diagonality up to degree 20") {
  for (const auto& space : {unit_uniform(), ParameterSpace({Distribution::gaussian(0.5, 2.0)})}) {
    const int d = 20;
    const PolynomialBasis b(space, d);
    const auto rule = gauss_rule(space, d + 1);  // exact to degree 2d + 1
    const Eigen::MatrixXd psi = b.vandermonde(rule.nodes);
    const Eigen::MatrixXd gram = psi.transpose() * rule.weights->asDiagonal() * psi;
    const Eigen::VectorXd norms = b.squared_norms();
    for (Eigen::Index i = 0; i < gram.rows(); ++i)
      for (Eigen::Index j = 0; j < gram.cols(); ++j) {
        // Hermite norms grow like n!; compare relative to the diagonal scale.
        const double scale = std::sqrt(norms[i] * norms[j]);
        if (i == j)
          CHECK(std::abs(gram(i, j) - norms[i]) / scale < 1e-10);
        else
          CHECK(std::abs(gram(i, j)) / scale < 1e-10);
      }
  }
}

TEST_CASE("two-dimensional mixed basis is orthogonal") {
  const ParameterSpace space({Distribution::uniform(0.0, 3.0), Distribution::gaussian(-1.0, 0.5)});
  const PolynomialBasis b(space, 4);
  const auto rule = gauss_rule(space, 5);
  const Eigen::MatrixXd psi = b.vandermonde(rule.nodes);
  const Eigen::MatrixXd gram = psi.transpose() * rule.weights->asDiagonal() * psi;
  CHECK((gram - b.gram()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(b.gram()(0, 0) == 1.0);
}

TEST_CASE("moments from coefficients") {
  const PolynomialBasis b(unit_uniform(), 2);
  Eigen::MatrixXd deterministic = Eigen::MatrixXd::Zero(3, 2);
  deterministic.row(0) << 4.0, -2.0;
  auto m = moments_from_coefficients(b, deterministic);
  CHECK(m.mean[0] == 4.0);
  CHECK(m.mean[1] == -2.0);
  CHECK(m.covariance.norm() == 0.0);

  Eigen::MatrixXd linear(3, 1);
  linear << 0.0, 1.0, 0.0;
  m = moments_from_coefficients(b, linear);
  CHECK(m.mean[0] == 0.0);
  CHECK(m.covariance(0, 0) == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(moments_from_coefficients(b, Eigen::MatrixXd::Zero(4, 1)), ShapeError);
}

TEST_CASE("moments of a smooth two-output function match dense trapezoid integration") {
  const auto f = [](double w) { return Eigen::Vector2d(std::exp(w), std::sin(2 * w) + w * w); };
  const ParameterSpace space = unit_uniform();
  const PolynomialBasis b(space, 16);
  const EstimatorMap map(b, gauss_rule(space, 30), EstimatorKind::Projection);
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(map.nodes()), 2);
  for (Eigen::Index j = 0; j < samples.rows(); ++j) samples.row(j) = f(map.collocation().nodes(j, 0)).transpose();
  const auto m = moments_from_coefficients(b, estimate_coefficients(map, samples));

  // Oracle: 10^4-point trapezoid over omega with density 1/2.
  const int n = 10000;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
  for (int i = 0; i <= n; ++i) {
    const double w = -1.0 + 2.0 * i / n;
    const double weight = (i == 0 || i == n ? 0.5 : 1.0) * (2.0 / n) * 0.5;
    const Eigen::Vector2d v = f(w);
    mean += weight * v;
    second += weight * v * v.transpose();
  }
  const Eigen::Matrix2d cov = second - mean * mean.transpose();
  CHECK((m.mean - mean).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((m.covariance - cov).cwiseAbs().maxCoeff() < 1e-6);
}
