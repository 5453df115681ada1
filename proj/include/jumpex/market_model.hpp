#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace jumpex {

// ---------------------------------------------------------------------------
// Jump specification: finite-activity compound Poisson with one of three
// size laws.  m1/m2 are the *law* moments E[e], E[ee^T]; the corresponding
// jump-measure integrals are intensity * m1 and intensity * m2.
// ---------------------------------------------------------------------------
struct JumpSpec {
  enum class Law { Atoms, Gaussian, UniformBox };

  double intensity = 0.0;
  Law law = Law::Atoms;
  int D = 1;

  // Atoms law.
  std::vector<Eigen::VectorXd> atom_sizes;
  std::vector<double> atom_probs;

  // Gaussian law: mean + isotropic covariance sd^2 * I.
  Eigen::VectorXd gauss_mean;
  double gauss_sd = 0.0;

  // Uniform box law.
  Eigen::VectorXd box_lo, box_hi;

  Eigen::VectorXd m1;  // E[e]
  Eigen::MatrixXd m2;  // E[ee^T]

  Eigen::VectorXd nu_m1() const { return intensity * m1; }
  Eigen::MatrixXd nu_m2() const { return intensity * m2; }
  bool active() const { return intensity > 0.0; }

  static JumpSpec none(int D);
  static JumpSpec atoms(double intensity, std::vector<Eigen::VectorXd> sizes,
                        std::vector<double> probs);
  static JumpSpec gaussian(double intensity, Eigen::VectorXd mean, double sd);
  static JumpSpec uniform_box(double intensity, Eigen::VectorXd lo,
                              Eigen::VectorXd hi);

  // Throws std::invalid_argument on malformed data (probabilities not
  // summing to one, negative intensity, non-PSD m2, dimension mismatch).
  void validate() const;

  // One draw from the size law.
  Eigen::VectorXd sample(std::mt19937_64& rng) const;

  // E[f(e)] under the size law: exact for atoms, 64-node-per-dimension
  // tensor quadrature for Gaussian (Gauss-Hermite) and uniform
  // (Gauss-Legendre) laws.
  double law_expectation(const std::function<double(const Eigen::VectorXd&)>& f,
                         int nodes_per_dim = 64) const;
};

// Damping function psi(x) = sqrt(||x||^2 + c^2) - c (c > 0): vanishes only
// at 0 and has gradient norm < 1.
struct Damping {
  double c = 0.5;
};

double psi(const Damping& d, const Eigen::VectorXd& x);
double psi(const Damping& d, double x);

// ---------------------------------------------------------------------------
// Coefficient field: either constant (b, a, gamma) or the scaled family
// b(y) = U(y) b~, a(y) = U(y) a~, gamma(y) = U(y) g~ with
// U(y) = (u0 + u1 / (1 + ||y||^2)) I, which keeps b^T Sigma^-1 b constant
// in y by construction.
// ---------------------------------------------------------------------------
struct CoefficientField {
  enum class Variant { Constant, Proportional };

  Variant variant = Variant::Constant;
  int D = 1;

  // Constant variant.
  Eigen::VectorXd b_const;
  Eigen::MatrixXd a_const, gamma_const;

  // Proportional variant.
  double u0 = 1.0, u1 = 0.0;
  Eigen::VectorXd b_tilde;
  Eigen::MatrixXd a_tilde, gamma_tilde;

  static CoefficientField constant(Eigen::VectorXd b, Eigen::MatrixXd a,
                                   Eigen::MatrixXd gamma);
  static CoefficientField proportional(double u0, double u1,
                                       Eigen::VectorXd b_tilde,
                                       Eigen::MatrixXd a_tilde,
                                       Eigen::MatrixXd gamma_tilde);

  double u_scalar(const Eigen::VectorXd& y) const;
  Eigen::VectorXd b(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd a(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd gamma(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd A(const Eigen::VectorXd& y) const;  // a a^T

  bool is_constant() const { return variant == Variant::Constant; }
};

struct MarketModel {
  CoefficientField coeffs;
  JumpSpec jumps;
  Damping damping;
  double T = 1.0;

  int dim() const { return coeffs.D; }
  // Dimension of the stacked integrator vector: D^2 + 3D, laid out as
  // [W (D) | sheet (D^2, row-major over (d,d')) | jump (D) | mark (D)].
  int z_dim() const { return coeffs.D * coeffs.D + 3 * coeffs.D; }
};

// Sigma(y) = A(y) + gamma(y) (intensity * m2) gamma(y)^T.  Throws
// std::runtime_error naming y if the result is not positive definite.
Eigen::MatrixXd sigma_matrix(const MarketModel& model, const Eigen::VectorXd& y);

// One draw (e, v) with e from the jump-size law and v = psi(e) * xi,
// xi ~ N(0, I_D) fresh.
std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_augmented_jump(
    const MarketModel& model, std::mt19937_64& rng);

// Characteristic exponent of the limit integrator triple at time 1:
//   kappa(u) = 0.5 ||u_W||^2 + 0.5 ||u_sheet||^2
//            + intensity * E_e[1 - exp(i u_J . e) exp(-0.5 psi(e)^2 ||u_xi||^2)
//                              + i u_J . e],
// so that exp(-t * kappa(u)) is the limit characteristic function at time t.
// u is laid out per MarketModel::z_dim().
std::complex<double> limit_char_exponent(const MarketModel& model,
                                         const Eigen::VectorXd& u);

// Validates model structure and checks Sigma(y) admits a Cholesky
// factorization at `probes` quasi-random points in a box of half-width
// `box_halfwidth` around y_center.  Throws on failure, naming the offending
// quantity.
void validate_model(const MarketModel& model, const Eigen::VectorXd& y_center,
                    int probes = 32, double box_halfwidth = 1.0);

// Deterministic low-discrepancy (Halton) probe points used by
// validate_model; exposed for tests.
std::vector<Eigen::VectorXd> halton_box_points(int count, int dim,
                                               const Eigen::VectorXd& center,
                                               double halfwidth);

}  // namespace jumpex
