#pragma once

#include <Eigen/Dense>
#include <functional>

namespace jumpex {

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Gauss-Hermite rule for the standard normal weight: integrates
// E[f(xi)] = sum_i w_i f(x_i) exactly for polynomials up to degree 2n-1,
// with weights summing to 1.  Nodes/weights from the Golub-Welsch
// eigenvalue method on the Jacobi matrix.
QuadratureRule gauss_hermite(int n);

// Gauss-Legendre rule on [lo, hi] with weights summing to (hi - lo).
QuadratureRule gauss_legendre(int n, double lo, double hi);

// Tensor-product expectation E[f(xi)] for xi ~ N(0, I_dim) using
// nodes_per_dim Gauss-Hermite nodes in each coordinate.
double gauss_expectation(int dim, int nodes_per_dim,
                         const std::function<double(const Eigen::VectorXd&)>& f);

}  // namespace jumpex
