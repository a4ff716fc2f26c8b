#include <doctest.h>

#include <cmath>

#include "pcesocp/errors.hpp"
#include "pcesocp/propagation.hpp"

using namespace pcesocp;

namespace {

const ParameterSpace kUnit({Distribution::uniform(-1.0, 1.0)});

// dx/dt = -omega x, x(0) = 1
UncertainOde decay(double horizon) {
  UncertainOde ode;
  ode.state_dim = 1;
  ode.horizon = horizon;
  ode.initial = [](auto, auto x0) { x0[0] = 1.0; };
  ode.dynamics = [](double, auto x, auto w, auto dx) { dx[0] = -w[0] * x[0]; };
  return ode;
}

}  // namespace

TEST_CASE("RK4 on elementary problems") {
  const TimeGrid grid = TimeGrid::over(1.0, 1e-3, 10);
  const double one = 1.0;
  auto traj = integrate_ode([](double, auto, auto dx) { dx[0] = 0.0; }, std::span(&one, 1), grid);
  CHECK(traj.states(Eigen::last, 0) == 1.0);
  CHECK(traj.times.size() == 101);
  CHECK(traj.times.back() == doctest::Approx(1.0));

  traj = integrate_ode([](double, auto x, auto dx) { dx[0] = -x[0]; }, std::span(&one, 1), grid);
  CHECK(std::abs(traj.states(Eigen::last, 0) - std::exp(-1.0)) < 1e-8);

  // Linear in t is integrated exactly.
  const double zero = 0.0;
  traj = integrate_ode([](double t, auto, auto dx) { dx[0] = 2.0 * t; }, std::span(&zero, 1), grid);
  CHECK(std::abs(traj.states(Eigen::last, 0) - 1.0) < 1e-12);
}

TEST_CASE("RK4 divergence is reported with its time") {
  // dx/dt = x^2 from x(0) = 1 blows up at t = 1.
  const double one = 1.0;
  try {
    integrate_ode([](double, auto x, auto dx) { dx[0] = x[0] * x[0]; }, std::span(&one, 1),
                  TimeGrid::over(2.0, 1e-3, 10));
    FAIL("no divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.time() > 0.9);
    CHECK(e.time() < 1.1);
  }
}

TEST_CASE("time grid validation") {
  TimeGrid bad;
  bad.steps = 15;
  bad.store_every = 10;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = TimeGrid{};
  bad.dt = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("deterministic dynamics give zero higher coefficients") {
  UncertainOde ode = decay(2.0);
  ode.dynamics = [](double, auto x, auto, auto dx) { dx[0] = -x[0]; };
  const EstimatorMap map(PolynomialBasis(kUnit, 4), gauss_rule(kUnit, 5), EstimatorKind::Projection);
  const auto grid = TimeGrid::over(2.0, 1e-3, 100);
  for (auto coupling : {Coupling::Decoupled, Coupling::Coupled}) {
    const auto field = propagate(ode, map, grid, coupling);
    for (const auto& block : field.blocks) CHECK(block.bottomRows(4).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(field.blocks.back()(0, 0) - std::exp(-2.0)) < 1e-8);
  }
}

TEST_CASE("mean of a linear random decay matches the exact expectation") {
  // E[exp(-omega t)] = sinh(t) / t for omega ~ U(-1, 1).
  const EstimatorMap map(PolynomialBasis(kUnit, 6), gauss_rule(kUnit, 7), EstimatorKind::Projection);
  const auto field = propagate_decoupled(decay(1.0), map, TimeGrid::over(1.0, 1e-3, 10));
  double worst = 0.0;
  for (std::size_t k = 1; k < field.times.size(); ++k) {
    const double t = field.times[k];
    worst = std::max(worst, std::abs(field.blocks[k](0, 0) - std::sinh(t) / t));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("coupled equals decoupled on square Gauss designs") {
  for (int d : {2, 4, 6}) {
    const EstimatorMap map(PolynomialBasis(kUnit, d), gauss_rule(kUnit, static_cast<std::size_t>(d) + 1),
                           EstimatorKind::Projection);
    const auto grid = TimeGrid::over(1.0, 1e-3, 100);
    const auto a = propagate_decoupled(decay(1.0), map, grid);
    const auto b = propagate_coupled(decay(1.0), map, grid);
    REQUIRE(a.times == b.times);
    double worst = 0.0;
    for (std::size_t k = 0; k < a.blocks.size(); ++k)
      worst = std::max(worst, (a.blocks[k] - b.blocks[k]).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("divergence in propagation names a node") {
  // dx/dt = omega x^2 with omega ~ U(0, 2): nodes with omega > 1/2 blow up before t = 2.
  const ParameterSpace space({Distribution::uniform(0.0, 2.0)});
  UncertainOde ode;
  ode.horizon = 2.0;
  ode.initial = [](auto, auto x0) { x0[0] = 1.0; };
  ode.dynamics = [](double, auto x, auto w, auto dx) { dx[0] = w[0] * x[0] * x[0]; };
  const EstimatorMap map(PolynomialBasis(space, 3), gauss_rule(space, 4), EstimatorKind::Projection);
  const auto grid = TimeGrid::over(2.0, 1e-3, 10);
  for (auto coupling : {Coupling::Decoupled, Coupling::Coupled}) {
    try {
      propagate(ode, map, grid, coupling);
      FAIL("no divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.node() < 4);
      CHECK(e.time() <= 2.0);
    }
  }
}

TEST_CASE("surface reconstruction and RMSE") {
  const EstimatorMap map(PolynomialBasis(kUnit, 8), gauss_rule(kUnit, 9), EstimatorKind::Projection);
  const auto grid = TimeGrid::over(1.0, 1e-3, 50);
  const auto field = propagate_decoupled(decay(1.0), map, grid);
  Eigen::MatrixXd points(5, 1);
  points << -1.0, -0.4, 0.0, 0.3, 1.0;

  // Self-consistency: RMSE against its own reconstruction is zero.
  const auto self = reconstruct_surface(field, map.basis(), points);
  CHECK(surface_rmse(field, map.basis(), self, 0) == 0.0);

  // Against the exact surface exp(-omega t).
  ReferenceSurface exact;
  exact.times = field.times;
  exact.points = points;
  for (Eigen::Index s = 0; s < points.rows(); ++s) {
    Eigen::MatrixXd st(static_cast<Eigen::Index>(exact.times.size()), 1);
    for (std::size_t k = 0; k < exact.times.size(); ++k)
      st(static_cast<Eigen::Index>(k), 0) = std::exp(-points(s, 0) * exact.times[k]);
    exact.states.push_back(st);
  }
  CHECK(surface_rmse(field, map.basis(), exact, 0) < 1e-7);

  ReferenceSurface shifted = exact;
  shifted.times.pop_back();
  CHECK_THROWS_AS(surface_rmse(field, map.basis(), shifted, 0), ShapeError);
  CHECK_THROWS_AS(surface_rmse(field, map.basis(), exact, 1), ShapeError);
}
