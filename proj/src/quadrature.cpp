#include "jumpex/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace jumpex {

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
// matrix with the given off-diagonal entries (diagonal zero for both weight
// families used here); the weight at node k is mu0 * (first eigenvector
// component)^2.
QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = offdiag[i];
    jacobi(i + 1, i) = offdiag[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("quadrature: Jacobi eigendecomposition failed");
  QuadratureRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  if (n == 1) {
    QuadratureRule rule;
    rule.nodes = Eigen::VectorXd::Zero(1);
    rule.weights = Eigen::VectorXd::Ones(1);
    return rule;
  }
  // Probabilists' Hermite recurrence: off-diagonal sqrt(i), total mass 1.
  Eigen::VectorXd offdiag(n - 1);
  for (int i = 1; i < n; ++i) offdiag[i - 1] = std::sqrt(static_cast<double>(i));
  return golub_welsch(offdiag, 1.0);
}

QuadratureRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  if (!(hi > lo)) throw std::invalid_argument("gauss_legendre: need hi > lo");
  QuadratureRule rule;
  if (n == 1) {
    rule.nodes = Eigen::VectorXd::Constant(1, 0.5 * (lo + hi));
    rule.weights = Eigen::VectorXd::Constant(1, hi - lo);
    return rule;
  }
  // Legendre recurrence on [-1, 1]: off-diagonal i / sqrt(4 i^2 - 1), mass 2.
  Eigen::VectorXd offdiag(n - 1);
  for (int i = 1; i < n; ++i) {
    const double di = static_cast<double>(i);
    offdiag[i - 1] = di / std::sqrt(4.0 * di * di - 1.0);
  }
  rule = golub_welsch(offdiag, 2.0);
  // Affine map [-1, 1] -> [lo, hi].
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  rule.nodes = (rule.nodes.array() * half + mid).matrix();
  rule.weights *= half;
  return rule;
}

double gauss_expectation(int dim, int nodes_per_dim,
                         const std::function<double(const Eigen::VectorXd&)>& f) {
  if (dim < 1) throw std::invalid_argument("gauss_expectation: need dim >= 1");
  const QuadratureRule rule = gauss_hermite(nodes_per_dim);
  const int n = static_cast<int>(rule.nodes.size());
  std::vector<int> index(static_cast<size_t>(dim), 0);
  Eigen::VectorXd point(dim);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      point[d] = rule.nodes[index[static_cast<size_t>(d)]];
      w *= rule.weights[index[static_cast<size_t>(d)]];
    }
    total += w * f(point);
    int d = 0;
    for (; d < dim; ++d) {
      if (++index[static_cast<size_t>(d)] < n) break;
      index[static_cast<size_t>(d)] = 0;
    }
    if (d == dim) break;
  }
  return total;
}

}  // namespace jumpex
