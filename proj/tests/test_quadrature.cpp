#include <doctest.h>

#include <cmath>
#include <set>

#include "pcesocp/errors.hpp"
#include "pcesocp/quadrature.hpp"

using namespace pcesocp;

namespace {

const ParameterSpace kUnit({Distribution::uniform(-1.0, 1.0)});

// E[x^k] for the canonical measures.
double uniform_moment(int k) { return k % 2 ? 0.0 : 1.0 / (k + 1.0); }
double gaussian_moment(int k) {
  if (k % 2) return 0.0;
  double v = 1.0;
  for (int j = k - 1; j > 0; j -= 2) v *= j;
  return v;
}

}  // namespace

TEST_CASE("small Gauss-Legendre rules") {
  auto rule = gauss_rule(kUnit, 1);
  REQUIRE(rule.size() == 1);
  CHECK(rule.nodes(0, 0) == 0.0);
  CHECK((*rule.weights)[0] == doctest::Approx(1.0));

  rule = gauss_rule(kUnit, 2);
  REQUIRE(rule.size() == 2);
  CHECK(rule.nodes(0, 0) == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(rule.nodes(1, 0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK((*rule.weights)[0] == doctest::Approx(0.5));
  CHECK((*rule.weights)[1] == doctest::Approx(0.5));
}

TEST_CASE("integrate") {
  for (std::size_t m = 1; m <= 40; ++m) {
    const auto rule = gauss_rule(kUnit, m);
    CHECK(std::abs(integrate(rule, [](auto) { return 1.0; }) - 1.0) < 1e-12);
  }
  const auto rule2 = gauss_rule(kUnit, 2);
  CHECK(integrate(rule2, [](auto w) { return w[0] * w[0]; }) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const auto rule5 = gauss_rule(kUnit, 5);
  const auto p3p5 = [](auto w) {
    const double x = w[0];
    const double p3 = (5 * x * x * x - 3 * x) / 2;
    const double p5 = (63 * std::pow(x, 5) - 70 * x * x * x + 15 * x) / 8;
    return p3 * p5;
  };
  CHECK(std::abs(integrate(rule5, p3p5)) < 1e-12);

  CHECK_THROWS_AS(integrate(rule5.without_weights(), p3p5), MissingWeights);
}

TEST_CASE("Gauss exactness for monomials") {
  SUBCASE("uniform") {
    for (std::size_t m = 1; m <= 12; ++m) {
      const auto rule = gauss_rule(kUnit, m);
      for (int k = 0; k <= static_cast<int>(2 * m - 1); ++k)
        CHECK(std::abs(integrate(rule, [k](auto w) { return std::pow(w[0], k); }) - uniform_moment(k)) < 1e-12);
    }
  }
  SUBCASE("gaussian, relative to the moment scale") {
    const ParameterSpace normal({Distribution::gaussian(0.0, 1.0)});
    for (std::size_t m = 1; m <= 10; ++m) {
      const auto rule = gauss_rule(normal, m);
      for (int k = 0; k <= static_cast<int>(2 * m - 1); ++k) {
        const double got = integrate(rule, [k](auto w) { return std::pow(w[0], k); });
        CHECK(std::abs(got - gaussian_moment(k)) < 1e-12 * std::max(1.0, gaussian_moment(k + (k % 2))));
      }
    }
  }
  SUBCASE("shifted uniform, tensor product") {
    // omega_1 ~ U(0, 2), omega_2 ~ U(-1, 1): E[w1^a w2^b] = 2^a/(a+1) * uniform_moment(b)
    const ParameterSpace space({Distribution::uniform(0.0, 2.0), Distribution::uniform(-1.0, 1.0)});
    const std::size_t m = 4;
    const auto rule = gauss_rule(space, m);
    CHECK(rule.size() == m * m);
    for (int a = 0; a <= 7; ++a)
      for (int b = 0; b <= 7; ++b) {
        const double exact = std::pow(2.0, a) / (a + 1.0) * uniform_moment(b);
        CHECK(std::abs(integrate(rule, [a, b](auto w) { return std::pow(w[0], a) * std::pow(w[1], b); }) - exact) <
              1e-12 * std::max(1.0, exact));
      }
  }
}

TEST_CASE("rules contain their nodes and have positive weights") {
  const ParameterSpace space({Distribution::uniform(-3.0, 5.0), Distribution::gaussian(1.0, 0.2)});
  for (std::size_t m : {1u, 3u, 7u, 20u}) {
    const auto rule = gauss_rule(space, m);
    CHECK(std::abs(rule.weights->sum() - 1.0) < 1e-12);
    CHECK((rule.weights->array() > 0.0).all());
    for (std::size_t j = 0; j < rule.size(); ++j) {
      const Eigen::VectorXd w = rule.node(j);
      CHECK(space.contains(std::span<const double>(w.data(), 2)));
    }
  }
  // Large rules stay accurate.
  const auto big = gauss_rule(kUnit, 100);
  CHECK(std::abs(big.weights->sum() - 1.0) < 1e-12);
  CHECK((big.weights->array() > 0.0).all());
}

TEST_CASE("uniform grid design") {
  const auto grid = design_nodes(kUnit, 3, DesignKind::UniformGrid);
  REQUIRE(grid.size() == 3);
  CHECK(grid.nodes(0, 0) == -1.0);
  CHECK(grid.nodes(1, 0) == 0.0);
  CHECK(grid.nodes(2, 0) == 1.0);
  CHECK_FALSE(grid.has_weights());

  const ParameterSpace plane({Distribution::uniform(0, 1), Distribution::uniform(0, 1)});
  CHECK(design_nodes(plane, 9, DesignKind::UniformGrid).size() == 9);
  CHECK_THROWS_AS(design_nodes(plane, 8, DesignKind::UniformGrid), ShapeError);
}

TEST_CASE("Latin hypercube stratification and determinism") {
  const ParameterSpace space({Distribution::uniform(-1, 1), Distribution::gaussian(0, 1)});
  const std::size_t q = 11;
  const auto a = design_nodes(space, q, DesignKind::LatinHypercube, 42);
  const auto b = design_nodes(space, q, DesignKind::LatinHypercube, 42);
  const auto c = design_nodes(space, q, DesignKind::LatinHypercube, 43);
  CHECK(a.nodes == b.nodes);
  CHECK(a.nodes != c.nodes);

  // Uniform axis: stratum index from the value; Gaussian axis: from the normal CDF.
  std::set<int> strata_u, strata_g;
  for (std::size_t j = 0; j < q; ++j) {
    const double u = (a.nodes(static_cast<Eigen::Index>(j), 0) + 1.0) / 2.0;
    const double g = 0.5 * std::erfc(-a.nodes(static_cast<Eigen::Index>(j), 1) / std::sqrt(2.0));
    strata_u.insert(static_cast<int>(std::floor(u * q)));
    strata_g.insert(static_cast<int>(std::floor(g * q)));
  }
  CHECK(strata_u.size() == q);
  CHECK(strata_g.size() == q);
}
