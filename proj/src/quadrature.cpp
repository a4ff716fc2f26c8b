#include "pcesocp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pcesocp/errors.hpp"
#include "pcesocp/rng.hpp"

namespace pcesocp {

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::GaussTensor: return "gauss";
    case DesignKind::UniformGrid: return "grid";
    case DesignKind::LatinHypercube: return "lhs";
  }
  return "unknown";
}

CollocationSet CollocationSet::without_weights() const {
  CollocationSet out{nodes, std::nullopt, kind};
  return out;
}

namespace {

// Off-diagonal k >= 1 of the Jacobi matrix of the canonical measure.
double jacobi_offdiag(Family family, std::size_t k) {
  const double kk = static_cast<double>(k);
  switch (family) {
    case Family::Uniform: return kk / std::sqrt(4.0 * kk * kk - 1.0);
    case Family::Gaussian: return std::sqrt(kk);
  }
  throw UnsupportedDistribution("unsupported distribution tag");
}

}  // namespace

void gauss_rule_1d(const Distribution& marginal, std::size_t m, Eigen::VectorXd& nodes,
                   Eigen::VectorXd& weights) {
  if (m == 0) throw DomainError("Gauss rule needs at least one point");
  const auto n = static_cast<Eigen::Index>(m);
  std::vector<double> b(m + 1, 0.0);
  for (std::size_t k = 1; k <= m; ++k) b[k] = jacobi_offdiag(marginal.family, k);

  Eigen::VectorXd canonical;
  weights.resize(n);
  if (n == 1) {
    canonical = Eigen::VectorXd::Zero(1);
  } else {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (Eigen::Index k = 1; k < n; ++k) sub[k - 1] = b[static_cast<std::size_t>(k)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("Golub-Welsch eigensolve failed");
    canonical = solver.eigenvalues();
  }

  // Newton polish on the orthonormal polynomial of degree m, then Christoffel
  // weights 1 / sum_k phi_k(x)^2; the eigenvector formula loses the relative
  // accuracy of the tiny tail weights.
  for (Eigen::Index j = 0; j < n; ++j) {
    double x = canonical[j];
    double christoffel = 1.0;
    for (int iter = 0; iter < 3; ++iter) {
      double p_prev = 0.0, p = 1.0, dp_prev = 0.0, dp = 0.0;
      christoffel = 1.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double p_next = (x * p - b[k] * p_prev) / b[k + 1];
        const double dp_next = (p + x * dp - b[k] * dp_prev) / b[k + 1];
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        if (k + 1 < m) christoffel += p * p;
      }
      if (dp != 0.0 && std::isfinite(p / dp)) x -= p / dp;
    }
    canonical[j] = x;
    weights[j] = 1.0 / christoffel;
  }
  weights /= weights.sum();

  // Symmetric families: enforce exact antisymmetry of the nodes.
  for (Eigen::Index k = 0; k < n / 2; ++k) {
    const double a = 0.5 * (canonical[n - 1 - k] - canonical[k]);
    canonical[k] = -a;
    canonical[n - 1 - k] = a;
    const double w = 0.5 * (weights[k] + weights[n - 1 - k]);
    weights[k] = weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) canonical[n / 2] = 0.0;

  nodes.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) nodes[k] = marginal.from_canonical(canonical[k]);
}

namespace {

// Tensor product of per-axis 1-D point lists; first axis varies slowest.
Eigen::MatrixXd tensor_nodes(const std::vector<Eigen::VectorXd>& axes) {
  std::size_t q = 1;
  for (const auto& a : axes) q *= static_cast<std::size_t>(a.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(axes.size()));
  std::vector<Eigen::Index> counter(axes.size(), 0);
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t k = 0; k < axes.size(); ++k)
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = axes[k][counter[k]];
    for (std::size_t k = axes.size(); k-- > 0;) {
      if (++counter[k] < axes[k].size()) break;
      counter[k] = 0;
    }
  }
  return out;
}

std::size_t integer_root(std::size_t q, std::size_t dims) {
  auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(q), 1.0 / dims)));
  for (std::size_t cand : {m > 0 ? m - 1 : 0, m, m + 1}) {
    std::size_t pw = 1;
    for (std::size_t k = 0; k < dims; ++k) pw *= cand;
    if (pw == q) return cand;
  }
  throw ShapeError("uniform grid in " + std::to_string(dims) + " dimensions needs q = m^" +
                   std::to_string(dims) + ", got q = " + std::to_string(q));
}

Eigen::VectorXd grid_axis(const Distribution& marginal, std::size_t m) {
  Eigen::VectorXd axis(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    double p;
    if (marginal.family == Family::Uniform)
      p = m == 1 ? 0.5 : static_cast<double>(j) / static_cast<double>(m - 1);
    else
      p = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
    axis[static_cast<Eigen::Index>(j)] = marginal.quantile(p);
  }
  return axis;
}

}  // namespace

CollocationSet gauss_rule(const ParameterSpace& space, std::size_t points_per_dim) {
  std::vector<Eigen::VectorXd> axes(space.dims());
  std::vector<Eigen::VectorXd> axis_weights(space.dims());
  for (std::size_t k = 0; k < space.dims(); ++k)
    gauss_rule_1d(space.marginal(k), points_per_dim, axes[k], axis_weights[k]);

  CollocationSet rule;
  rule.kind = DesignKind::GaussTensor;
  rule.nodes = tensor_nodes(axes);
  // Weights follow the same tensor ordering as the nodes.
  const Eigen::MatrixXd w = tensor_nodes(axis_weights);
  rule.weights = w.rowwise().prod();
  return rule;
}

CollocationSet design_nodes(const ParameterSpace& space, std::size_t q, DesignKind kind,
                            std::uint64_t seed) {
  if (q == 0) throw DomainError("design needs at least one node");
  const std::size_t dims = space.dims();
  CollocationSet set;
  set.kind = kind;

  switch (kind) {
    case DesignKind::GaussTensor: {
      const std::size_t m = integer_root(q, dims);
      return gauss_rule(space, m).without_weights();
    }
    case DesignKind::UniformGrid: {
      const std::size_t m = integer_root(q, dims);
      std::vector<Eigen::VectorXd> axes(dims);
      for (std::size_t k = 0; k < dims; ++k) axes[k] = grid_axis(space.marginal(k), m);
      set.nodes = tensor_nodes(axes);
      return set;
    }
    case DesignKind::LatinHypercube: {
      SplitMix64 rng(seed);
      set.nodes.resize(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(dims));
      std::vector<std::size_t> perm(q);
      for (std::size_t k = 0; k < dims; ++k) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = q; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        for (std::size_t j = 0; j < q; ++j) {
          const double p = (static_cast<double>(perm[j]) + rng.uniform()) / static_cast<double>(q);
          set.nodes(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
              space.marginal(k).quantile(p);
        }
      }
      return set;
    }
  }
  throw DomainError("unknown design kind");
}

double integrate(const CollocationSet& rule, const std::function<double(std::span<const double>)>& f) {
  if (!rule.has_weights()) throw MissingWeights("integration requires a weighted collocation set");
  double sum = 0.0;
  std::vector<double> point(rule.dims());
  for (std::size_t j = 0; j < rule.size(); ++j) {
    for (std::size_t k = 0; k < point.size(); ++k)
      point[k] = rule.nodes(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    sum += f(point) * (*rule.weights)[static_cast<Eigen::Index>(j)];
  }
  return sum;
}

}  // namespace pcesocp
