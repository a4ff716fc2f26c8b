#include "pcesocp/propagation.hpp"

#include <cmath>
#include <string>

#include "pcesocp/errors.hpp"

namespace pcesocp {

TimeGrid TimeGrid::over(double horizon, double dt, std::size_t store_every) {
  if (!(horizon > 0.0) || !(dt > 0.0)) throw DomainError("horizon and step must be positive");
  const double ratio = horizon / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-6 * ratio)
    throw DomainError("step does not divide the horizon");
  TimeGrid grid{horizon / static_cast<double>(steps), steps, store_every};
  grid.validate();
  return grid;
}

void TimeGrid::validate() const {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (steps == 0) throw DomainError("time grid needs at least one step");
  if (store_every == 0 || steps % store_every != 0)
    throw DomainError("storage stride must divide the number of steps");
}

std::vector<double> TimeGrid::stored_times() const {
  std::vector<double> t(stored_points());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k * store_every) * dt;
  return t;
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Preallocated RK4 stages for a state of fixed size.
class Rk4 {
 public:
  explicit Rk4(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

  template <class Rhs>
  void step(Rhs&& rhs, double t, double dt, std::vector<double>& x) {
    const std::size_t n = x.size();
    rhs(t, x, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k1_[i];
    rhs(t + 0.5 * dt, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k2_[i];
    rhs(t + 0.5 * dt, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + dt * k3_[i];
    rhs(t + dt, tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

 private:
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void check_ode(const UncertainOde& ode) {
  if (ode.state_dim == 0) throw ShapeError("ODE state dimension must be positive");
  if (!ode.initial || !ode.dynamics) throw DomainError("ODE needs initial state and dynamics");
}

}  // namespace

Coupling parse_coupling(std::string_view name) {
  if (name == "decoupled") return Coupling::Decoupled;
  if (name == "coupled") return Coupling::Coupled;
  throw DomainError("unknown coupling '" + std::string(name) + "' (expected decoupled or coupled)");
}

std::string_view to_string(Coupling coupling) {
  return coupling == Coupling::Decoupled ? "decoupled" : "coupled";
}

Trajectory integrate_ode(const OdeRhs& rhs, std::span<const double> x0, const TimeGrid& grid) {
  grid.validate();
  std::vector<double> x(x0.begin(), x0.end());
  if (!all_finite(x)) throw DivergenceError(0.0);
  Trajectory out;
  out.times = grid.stored_times();
  out.states.resize(static_cast<Eigen::Index>(out.times.size()), static_cast<Eigen::Index>(x.size()));
  out.states.row(0) = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));

  Rk4 rk4(x.size());
  auto f = [&rhs](double t, std::span<const double> s, std::span<double> d) { rhs(t, s, d); };
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t = static_cast<double>(k) * grid.dt;
    rk4.step(f, t, grid.dt, x);
    if (!all_finite(x)) throw DivergenceError(t + grid.dt);
    if ((k + 1) % grid.store_every == 0)
      out.states.row(static_cast<Eigen::Index>((k + 1) / grid.store_every)) =
          Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  }
  return out;
}

CoefficientField propagate_decoupled(const UncertainOde& ode, const EstimatorMap& map,
                                     const TimeGrid& grid) {
  check_ode(ode);
  grid.validate();
  const std::size_t n = ode.state_dim;
  const std::size_t q = map.nodes();
  const auto& nodes = map.collocation().nodes;
  const std::size_t dims = map.collocation().dims();

  std::vector<std::vector<double>> omega(q, std::vector<double>(dims));
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t k = 0; k < dims; ++k)
      omega[j][k] = nodes(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));

  // Stacked state X^ = [x(omega_1); ...; x(omega_q)].
  std::vector<double> x(q * n);
  for (std::size_t j = 0; j < q; ++j) {
    ode.initial(omega[j], std::span<double>(x).subspan(j * n, n));
    if (!all_finite(std::span<const double>(x).subspan(j * n, n))) throw DivergenceError(0.0, j);
  }

  auto rhs = [&](double t, std::span<const double> s, std::span<double> d) {
    for (std::size_t j = 0; j < q; ++j) ode.dynamics(t, s.subspan(j * n, n), omega[j], d.subspan(j * n, n));
  };

  CoefficientField field;
  field.times = grid.stored_times();
  field.blocks.reserve(field.times.size());
  const auto store = [&] {
    Eigen::Map<const RowMajor> stacked(x.data(), static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(n));
    field.blocks.push_back(map.matrix() * stacked);
  };
  store();

  Rk4 rk4(x.size());
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t = static_cast<double>(k) * grid.dt;
    rk4.step(rhs, t, grid.dt, x);
    for (std::size_t j = 0; j < q; ++j)
      if (!all_finite(std::span<const double>(x).subspan(j * n, n))) throw DivergenceError(t + grid.dt, j);
    if ((k + 1) % grid.store_every == 0) store();
  }
  return field;
}

CoefficientField propagate_coupled(const UncertainOde& ode, const EstimatorMap& map,
                                   const TimeGrid& grid) {
  check_ode(ode);
  grid.validate();
  const auto n = static_cast<Eigen::Index>(ode.state_dim);
  const auto q = static_cast<Eigen::Index>(map.nodes());
  const auto p = static_cast<Eigen::Index>(map.terms());
  const auto& nodes = map.collocation().nodes;
  const auto& a = map.matrix();
  const auto& psi = map.vandermonde();

  std::vector<std::vector<double>> omega(static_cast<std::size_t>(q));
  for (Eigen::Index j = 0; j < q; ++j) {
    auto& w = omega[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < nodes.cols(); ++k) w.push_back(nodes(j, k));
  }

  RowMajor h(q, n);
  for (Eigen::Index j = 0; j < q; ++j) {
    ode.initial(omega[static_cast<std::size_t>(j)], std::span<double>(h.row(j).data(), static_cast<std::size_t>(n)));
    if (!h.row(j).allFinite()) throw DivergenceError(0.0, static_cast<std::size_t>(j));
  }
  std::vector<double> x(static_cast<std::size_t>(p * n));
  Eigen::Map<RowMajor>(x.data(), p, n) = a * h;

  RowMajor at_nodes(q, n);
  RowMajor f_nodes(q, n);
  auto rhs = [&](double t, std::span<const double> s, std::span<double> d) {
    Eigen::Map<const RowMajor> coeffs(s.data(), p, n);
    at_nodes.noalias() = psi * coeffs;
    for (Eigen::Index j = 0; j < q; ++j) {
      ode.dynamics(t, std::span<const double>(at_nodes.row(j).data(), static_cast<std::size_t>(n)),
                   omega[static_cast<std::size_t>(j)],
                   std::span<double>(f_nodes.row(j).data(), static_cast<std::size_t>(n)));
      if (!f_nodes.row(j).allFinite()) throw DivergenceError(t, static_cast<std::size_t>(j));
    }
    Eigen::Map<RowMajor>(d.data(), p, n).noalias() = a * f_nodes;
  };

  CoefficientField field;
  field.times = grid.stored_times();
  field.blocks.reserve(field.times.size());
  const auto store = [&] { field.blocks.emplace_back(Eigen::Map<const RowMajor>(x.data(), p, n)); };
  store();

  Rk4 rk4(x.size());
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double t = static_cast<double>(k) * grid.dt;
    rk4.step(rhs, t, grid.dt, x);
    if (!all_finite(x)) throw DivergenceError(t + grid.dt);
    if ((k + 1) % grid.store_every == 0) store();
  }
  return field;
}

CoefficientField propagate(const UncertainOde& ode, const EstimatorMap& map, const TimeGrid& grid,
                           Coupling coupling) {
  return coupling == Coupling::Decoupled ? propagate_decoupled(ode, map, grid)
                                         : propagate_coupled(ode, map, grid);
}

ReferenceSurface reconstruct_surface(const CoefficientField& field, const PolynomialBasis& basis,
                                     const Eigen::MatrixXd& points) {
  if (field.terms() != basis.size()) throw ShapeError("coefficient field does not match basis size");
  const Eigen::MatrixXd psi = basis.vandermonde(points);
  const auto nt = static_cast<Eigen::Index>(field.times.size());
  const auto n = static_cast<Eigen::Index>(field.state_dim());

  ReferenceSurface out;
  out.times = field.times;
  out.points = points;
  out.states.assign(static_cast<std::size_t>(points.rows()), Eigen::MatrixXd(nt, n));
  for (Eigen::Index k = 0; k < nt; ++k) {
    const Eigen::MatrixXd values = psi * field.blocks[static_cast<std::size_t>(k)];  // N x n
    for (Eigen::Index s = 0; s < points.rows(); ++s) out.states[static_cast<std::size_t>(s)].row(k) = values.row(s);
  }
  return out;
}

double surface_rmse(const CoefficientField& field, const PolynomialBasis& basis,
                    const ReferenceSurface& reference, std::size_t state_index) {
  if (reference.times.size() != field.times.size())
    throw ShapeError("reference and coefficient field use different time grids");
  for (std::size_t k = 0; k < field.times.size(); ++k)
    if (std::abs(reference.times[k] - field.times[k]) > 1e-9)
      throw ShapeError("reference and coefficient field use different time grids");
  if (state_index >= field.state_dim()) throw ShapeError("state index out of range");

  const Eigen::MatrixXd psi = basis.vandermonde(reference.points);
  const auto col = static_cast<Eigen::Index>(state_index);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    const Eigen::VectorXd approx = psi * field.blocks[k].col(col);
    for (std::size_t s = 0; s < reference.states.size(); ++s) {
      const double e = approx[static_cast<Eigen::Index>(s)] -
                       reference.states[s](static_cast<Eigen::Index>(k), col);
      sum += e * e;
      ++count;
    }
  }
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace pcesocp
