#include "pcesocp/socp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "pcesocp/errors.hpp"

namespace pcesocp {

ControlGrid ControlGrid::uniform(double horizon, std::size_t intervals, double lower, double upper) {
  ControlGrid grid;
  grid.horizon = horizon;
  grid.intervals = intervals;
  grid.channels = 1;
  grid.lower = Eigen::VectorXd::Constant(1, lower);
  grid.upper = Eigen::VectorXd::Constant(1, upper);
  grid.validate();
  return grid;
}

void ControlGrid::validate() const {
  if (!(horizon > 0.0)) throw DomainError("control horizon must be positive");
  if (intervals == 0) throw DomainError("control grid needs at least one interval");
  if (channels == 0) throw DomainError("control grid needs at least one channel");
  if (static_cast<std::size_t>(lower.size()) != channels || static_cast<std::size_t>(upper.size()) != channels)
    throw ShapeError("control bounds must have one entry per channel");
  if ((lower.array() > upper.array()).any()) throw DomainError("control lower bound exceeds upper bound");
}

Eigen::VectorXd ControlGrid::flat_lower() const { return lower.replicate(static_cast<Eigen::Index>(node_count()), 1); }

Eigen::VectorXd ControlGrid::flat_upper() const { return upper.replicate(static_cast<Eigen::Index>(node_count()), 1); }

bool ControlGrid::feasible(const Eigen::VectorXd& u) const {
  if (static_cast<std::size_t>(u.size()) != parameter_count()) return false;
  return (u.array() >= flat_lower().array()).all() && (u.array() <= flat_upper().array()).all();
}

void control_eval(const ControlGrid& grid, std::span<const double> nodes, double t, std::span<double> out) {
  const double tol = 1e-12 * grid.horizon;
  if (!(t >= -tol && t <= grid.horizon + tol))
    throw DomainError("time " + std::to_string(t) + " outside the control horizon");
  if (nodes.size() != grid.parameter_count()) throw ShapeError("control vector has the wrong length");
  const double s = std::clamp(t / grid.spacing(), 0.0, static_cast<double>(grid.intervals));
  const auto k = std::min(static_cast<std::size_t>(s), grid.intervals - 1);
  const double frac = s - static_cast<double>(k);
  const std::size_t m = grid.channels;
  for (std::size_t c = 0; c < m; ++c) out[c] = (1.0 - frac) * nodes[k * m + c] + frac * nodes[(k + 1) * m + c];
}

Eigen::VectorXd control_eval(const ControlGrid& grid, const Eigen::VectorXd& nodes, double t) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.channels));
  control_eval(grid, std::span<const double>(nodes.data(), static_cast<std::size_t>(nodes.size())), t,
               std::span<double>(out.data(), grid.channels));
  return out;
}

Eigen::MatrixXd build_m(std::size_t intervals, double spacing) {
  if (intervals == 0 || !(spacing > 0.0)) throw DomainError("M needs n_t >= 1 and a positive spacing");
  const auto n = static_cast<Eigen::Index>(intervals + 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    m(k, k) = (k == 0 || k == n - 1) ? 2.0 : 4.0;
    if (k + 1 < n) m(k, k + 1) = m(k + 1, k) = 1.0;
  }
  return m * (spacing / 6.0);
}

Eigen::MatrixXd build_e(const PolynomialBasis& basis) {
  Eigen::MatrixXd e = basis.gram();
  e(0, 0) -= 1.0;
  return e;
}

void CostWeights::validate() const {
  if (state_weight.rows() != state_weight.cols() || control_weight.rows() != control_weight.cols())
    throw ShapeError("weight matrices must be square");
  const auto spd = [](const Eigen::MatrixXd& a) {
    if (!a.isApprox(a.transpose())) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    return llt.info() == Eigen::Success;
  };
  if (!spd(state_weight) || !spd(control_weight)) throw DomainError("Q and R must be symmetric positive definite");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  if (!reference) throw DomainError("cost weights need a reference trajectory");
}

namespace {

struct StateTerms {
  double tracking;
  double variance;
};

// |X - R|^2_{D (x) Q} and |X|^2_{E (x) I} for one coefficient block.
StateTerms state_terms(const Eigen::MatrixXd& block, const Eigen::VectorXd& reference, const Eigen::MatrixXd& q,
                       const Eigen::VectorXd& norms) {
  StateTerms out{0.0, (norms[0] - 1.0) * block.row(0).squaredNorm()};
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    Eigen::VectorXd e = block.row(i).transpose();
    if (i == 0) e -= reference;
    out.tracking += norms[i] * e.dot(q * e);
    if (i > 0) out.variance += norms[i] * block.row(i).squaredNorm();
  }
  return out;
}

}  // namespace

double cost_integrand(const Eigen::MatrixXd& block, const Eigen::VectorXd& reference,
                      const CostWeights& weights, const PolynomialBasis& basis) {
  if (static_cast<std::size_t>(block.rows()) != basis.size()) throw ShapeError("coefficient block does not match the basis");
  const auto terms = state_terms(block, reference, weights.state_weight, basis.squared_norms());
  return weights.epsilon * terms.tracking + (1.0 - weights.epsilon) * terms.variance;
}

CostBreakdown stochastic_cost(const CoefficientField& field, const ControlGrid& grid,
                              const Eigen::VectorXd& controls, const CostWeights& weights,
                              const PolynomialBasis& basis) {
  if (field.times.size() < 2 || field.blocks.size() != field.times.size())
    throw ShapeError("coefficient field needs at least two stored times");
  if (std::abs(field.times.front()) > 1e-9 || std::abs(field.times.back() - grid.horizon) > 1e-9 * grid.horizon)
    throw ShapeError("coefficient field does not span the control horizon");
  if (field.terms() != basis.size()) throw ShapeError("coefficient field does not match the basis");
  if (static_cast<std::size_t>(controls.size()) != grid.parameter_count())
    throw ShapeError("control vector has the wrong length");
  if (static_cast<std::size_t>(weights.state_weight.rows()) != field.state_dim() ||
      static_cast<std::size_t>(weights.control_weight.rows()) != grid.channels)
    throw ShapeError("weight matrices do not match the state or control dimension");

  const auto& norms = basis.squared_norms();
  const auto& q = weights.state_weight;
  CostBreakdown out;
  double prev_track = 0.0, prev_cov = 0.0;
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    const Eigen::VectorXd r = weights.reference(field.times[k]);
    if (static_cast<std::size_t>(r.size()) != field.state_dim()) throw ShapeError("reference has the wrong dimension");
    const auto [track, cov] = state_terms(field.blocks[k], r, q, norms);
    if (k > 0) {
      const double h = field.times[k] - field.times[k - 1];
      out.tracking += 0.5 * h * (prev_track + track);
      out.covariance += 0.5 * h * (prev_cov + cov);
    }
    prev_track = track;
    prev_cov = cov;
  }

  const Eigen::MatrixXd m = build_m(grid.intervals, grid.spacing());
  const auto nu = static_cast<Eigen::Index>(grid.channels);
  const auto& r = weights.control_weight;
  for (Eigen::Index a = 0; a < m.rows(); ++a)
    for (Eigen::Index b = std::max<Eigen::Index>(a - 1, 0); b <= std::min<Eigen::Index>(a + 1, m.rows() - 1); ++b)
      out.control += m(a, b) * controls.segment(a * nu, nu).dot(r * controls.segment(b * nu, nu));

  const double eps = weights.epsilon;
  out.total = eps * out.tracking + (1.0 - eps) * out.covariance + eps * out.control;
  return out;
}

UncertainOde close_loop(const ControlledOde& ode, const ControlGrid& grid, Eigen::VectorXd controls) {
  UncertainOde closed;
  closed.state_dim = ode.state_dim;
  closed.horizon = grid.horizon;
  closed.initial = ode.initial;
  closed.dynamics = [dyn = ode.dynamics, grid, u = std::move(controls)](
                        double t, std::span<const double> x, std::span<const double> omega, std::span<double> dx) {
    double buffer[8];
    std::vector<double> heap;
    std::span<double> value;
    if (grid.channels <= 8) {
      value = std::span<double>(buffer, grid.channels);
    } else {
      heap.resize(grid.channels);
      value = heap;
    }
    control_eval(grid, std::span<const double>(u.data(), static_cast<std::size_t>(u.size())), t, value);
    dyn(x, value, omega, dx);
  };
  return closed;
}

void StochasticOcp::validate() const {
  controls.validate();
  weights.validate();
  time_grid.validate();
  if (std::abs(time_grid.horizon() - controls.horizon) > 1e-9 * controls.horizon)
    throw ShapeError("integration grid and control grid cover different horizons");
  if (static_cast<std::size_t>(weights.state_weight.rows()) != ode.state_dim)
    throw ShapeError("Q does not match the state dimension");
  if (static_cast<std::size_t>(weights.control_weight.rows()) != ode.control_dim || ode.control_dim != controls.channels)
    throw ShapeError("R does not match the control dimension");
}

OcpEvaluation evaluate_ocp(const StochasticOcp& ocp, const Eigen::VectorXd& controls) {
  if (!ocp.controls.feasible(controls)) throw DomainError("control vector violates its bounds");
  const UncertainOde closed = close_loop(ocp.ode, ocp.controls, controls);
  OcpEvaluation out;
  try {
    out.field = propagate(closed, ocp.estimator, ocp.time_grid, ocp.coupling);
  } catch (const DivergenceError&) {
    out.cost = std::numeric_limits<double>::infinity();
    out.diverged = true;
    return out;
  }
  out.breakdown = stochastic_cost(out.field, ocp.controls, controls, ocp.weights, ocp.estimator.basis());
  out.cost = out.breakdown.total;
  if (!std::isfinite(out.cost)) {
    out.cost = std::numeric_limits<double>::infinity();
    out.diverged = true;
  }
  return out;
}

namespace {

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < threads; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

Eigen::VectorXd ocp_gradient(const StochasticOcp& ocp, const Eigen::VectorXd& controls, DifferenceScheme scheme,
                             double relative_step, std::size_t threads) {
  const Eigen::Index n = controls.size();
  const Eigen::VectorXd lo = ocp.controls.flat_lower();
  const Eigen::VectorXd hi = ocp.controls.flat_upper();
  Eigen::VectorXd grad(n);
  const double base = scheme == DifferenceScheme::Forward ? evaluate_ocp(ocp, controls).cost : 0.0;

  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t idx) {
    const auto i = static_cast<Eigen::Index>(idx);
    const double h = relative_step * std::max(1.0, std::abs(controls[i]));
    Eigen::VectorXd plus = controls, minus = controls;
    if (scheme == DifferenceScheme::Forward) {
      if (controls[i] + h <= hi[i]) {
        plus[i] += h;
        grad[i] = (evaluate_ocp(ocp, plus).cost - base) / h;
      } else {
        minus[i] -= h;
        grad[i] = (base - evaluate_ocp(ocp, minus).cost) / h;
      }
      return;
    }
    const double up = std::min(controls[i] + h, hi[i]);
    const double down = std::max(controls[i] - h, lo[i]);
    plus[i] = up;
    minus[i] = down;
    grad[i] = (evaluate_ocp(ocp, plus).cost - evaluate_ocp(ocp, minus).cost) / (up - down);
  });
  return grad;
}

OcpSolution solve_ocp(const StochasticOcp& ocp, const Eigen::VectorXd& initial, const SolveOptions& options) {
  ocp.validate();
  if (static_cast<std::size_t>(initial.size()) != ocp.controls.parameter_count())
    throw ShapeError("initial control vector has the wrong length");
  if (!ocp.controls.feasible(initial)) throw InvalidStart("initial control vector violates its bounds");
  const double start = evaluate_ocp(ocp, initial).cost;
  if (!std::isfinite(start)) throw InvalidStart("stochastic cost is not finite at the initial controls");

  const auto objective = [&](const Eigen::VectorXd& u) { return evaluate_ocp(ocp, u).cost; };
  const auto gradient = [&](const Eigen::VectorXd& u) {
    return ocp_gradient(ocp, u, options.scheme, options.relative_step, options.threads);
  };
  const BoxResult box = minimize_box(objective, gradient, initial, ocp.controls.flat_lower(),
                                     ocp.controls.flat_upper(), options.box);
  return {box.x, box.value, box.pg_norm, box.reason, box.iterations, box.evaluations, box.log};
}

}  // namespace pcesocp
