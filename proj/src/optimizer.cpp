#include "pcesocp/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "pcesocp/errors.hpp"

namespace pcesocp {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::FunctionTolerance: return "function-tolerance";
    case StopReason::IterationCap: return "iteration-cap";
    case StopReason::LineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  return (x - project(x - g, lower, upper)).lpNorm<Eigen::Infinity>();
}

BoxResult minimize_box(const Objective& f, const Gradient& grad, const Eigen::VectorXd& x0,
                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                       const BoxOptions& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw ShapeError("bounds do not match the variable count");
  if ((lower.array() > upper.array()).any()) throw DomainError("lower bound exceeds upper bound");

  BoxResult result;
  Eigen::VectorXd x = project(x0, lower, upper);
  double fx = f(x);
  std::size_t evaluations = 1;
  if (!std::isfinite(fx)) throw InvalidStart("objective is not finite at the initial point");
  Eigen::VectorXd g = grad(x);
  if (!g.allFinite()) throw InvalidStart("gradient is not finite at the initial point");

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian approximation
  bool h_is_identity = true;
  bool scaled = false;
  double pg = projected_gradient_norm(x, g, lower, upper);
  result.log.push_back({0, evaluations, fx, pg, x});

  StopReason reason = StopReason::IterationCap;
  std::size_t iteration = 0;
  while (true) {
    if (pg <= options.pg_tolerance) {
      reason = StopReason::Converged;
      break;
    }
    if (iteration >= options.max_iterations) {
      reason = StopReason::IterationCap;
      break;
    }

    // Variables pinned at a bound with the gradient pushing outward are held
    // there; the quasi-Newton step acts on the rest.
    const double binding = std::min(pg, 1e-8 + 1e-3 * pg);
    std::vector<bool> active(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      active[static_cast<std::size_t>(i)] = (x[i] <= lower[i] + binding && g[i] > 0.0) ||
                                            (x[i] >= upper[i] - binding && g[i] < 0.0);

    auto direction = [&](const Eigen::MatrixXd& inv_hessian) {
      Eigen::VectorXd g_free = g;
      for (Eigen::Index i = 0; i < n; ++i)
        if (active[static_cast<std::size_t>(i)]) g_free[i] = 0.0;
      Eigen::VectorXd d = -inv_hessian * g_free;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (active[ii]) d[i] = -g[i];
        else if (!std::isfinite(d[i])) d[i] = -g[i];
      }
      return d;
    };

    Eigen::VectorXd d = direction(h);
    double slope = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!active[static_cast<std::size_t>(i)]) slope += g[i] * d[i];
    if (!(slope < 0.0)) {
      h.setIdentity();
      h_is_identity = true;
      scaled = false;
      d = direction(h);
    }

    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = fx;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double alpha = 1.0;
      const double step_norm = d.lpNorm<Eigen::Infinity>();
      if (h_is_identity && !scaled && step_norm > options.initial_step)
        alpha = options.initial_step / step_norm;
      for (std::size_t bt = 0; bt <= options.max_backtracks; ++bt) {
        x_new = project(x + alpha * d, lower, upper);
        const double decrease = g.dot(x_new - x);
        if ((x_new - x).lpNorm<Eigen::Infinity>() == 0.0) break;
        f_new = f(x_new);
        ++evaluations;
        if (std::isfinite(f_new) && f_new <= fx + options.armijo * decrease && f_new <= fx) {
          accepted = true;
          break;
        }
        alpha *= options.backtrack;
      }
      if (!accepted) {
        if (h_is_identity) break;
        h.setIdentity();
        h_is_identity = true;
        scaled = false;
        d = direction(h);
      }
    }
    if (!accepted) {
      reason = StopReason::LineSearchFailure;
      break;
    }

    const Eigen::VectorXd g_new = grad(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      h += rho * ((1.0 + rho * y.dot(hy)) * s * s.transpose() - hy * s.transpose() - s * hy.transpose());
      h_is_identity = false;
    }

    const double previous = fx;
    x = x_new;
    fx = f_new;
    g = g_new;
    ++iteration;
    pg = projected_gradient_norm(x, g, lower, upper);
    result.log.push_back({iteration, evaluations, fx, pg, x});

    if (options.f_tolerance > 0.0 &&
        previous - fx <= options.f_tolerance * std::max({std::abs(previous), std::abs(fx), 1.0})) {
      reason = pg <= options.pg_tolerance ? StopReason::Converged : StopReason::FunctionTolerance;
      break;
    }
  }

  result.x = x;
  result.value = fx;
  result.pg_norm = pg;
  result.reason = reason;
  result.iterations = iteration;
  result.evaluations = evaluations;
  return result;
}

}  // namespace pcesocp
