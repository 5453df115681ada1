#pragma once

#include <Eigen/Dense>
#include <sstream>
#include <stdexcept>

namespace jumpex {

// True iff m is symmetric within tol and its eigenvalues are all >= -tol.
inline bool is_psd(const Eigen::MatrixXd& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, m.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

// Symmetric positive-semidefinite square root via the spectral theorem.
// Requires symmetry within sym_tol (relative infinity norm) and eigenvalues
// >= -neg_tol; tiny negative eigenvalues are clamped to zero.  Throws
// std::invalid_argument reporting the minimum eigenvalue otherwise.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& theta,
                                double sym_tol = 1e-10, double neg_tol = 1e-10) {
  if (theta.rows() != theta.cols())
    throw std::invalid_argument("psd_sqrt: matrix must be square");
  const double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
  if ((theta - theta.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) {
    throw std::invalid_argument("psd_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta);
  if (es.info() != Eigen::Success)
    throw std::invalid_argument("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double min_ev = ev.minCoeff();
  if (min_ev < -neg_tol) {
    std::ostringstream os;
    os << "psd_sqrt: matrix is indefinite (minimum eigenvalue " << min_ev << ")";
    throw std::invalid_argument(os.str());
  }
  for (int i = 0; i < ev.size(); ++i) ev[i] = std::sqrt(std::max(ev[i], 0.0));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Cubic smoothstep taper: 1 on [0, inner], 0 on [outer, inf), and the
// 3u^2 - 2u^3 transition in between (C^1 everywhere).
inline double smoothstep_taper(double r, double inner, double outer) {
  if (r <= inner) return 1.0;
  if (r >= outer) return 0.0;
  const double u = (r - inner) / (outer - inner);
  return 1.0 - u * u * (3.0 - 2.0 * u);
}

}  // namespace jumpex
