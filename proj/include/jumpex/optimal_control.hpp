#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "jumpex/exploratory_sde.hpp"
#include "jumpex/market_model.hpp"

namespace jumpex {

// Value-function coefficients v(t, x, y) = alpha(t) (x - what)^2 + beta(t, y)
// for the two solvable coefficient families.  alpha(t) = exp(-(T-t) K) with
// K = b^T Sigma^{-1} b (constant in y for both families).  beta is closed
// form for constant coefficients and a nested Monte Carlo estimator
// (returned with its standard error) for the scaled family.
struct AlphaBeta {
  enum class Family { Constant, Proportional };

  Family family = Family::Constant;
  int D = 1;
  double T = 1.0;
  double K = 0.0;
  double lambda = 0.0;
  double what = 0.0;
  double log_det_sigma = 0.0;  // constant family: log det Sigma

  // Proportional family: (estimate, standard error) of beta(t, y).
  std::function<std::pair<double, double>(double, const Eigen::VectorXd&)> beta_mc;

  double alpha(double t) const;
  std::pair<double, double> beta(double t, const Eigen::VectorXd& y) const;
};

struct BetaMcConfig {
  int time_steps = 64;
  std::size_t paths = 10000;
  std::uint64_t seed = 99;
};

// Solves the coefficient system for the supported families.  Constant
// coefficients require b != 0.  Throws std::invalid_argument otherwise.
AlphaBeta solve_alpha_beta(const MarketModel& model, double lambda, double what,
                           const BetaMcConfig& mc = {});

// Effective drift vector alpha b + A grad_y alpha + jump correction; the
// jump correction is computed from the size law even though it vanishes for
// the y-independent alpha of the supported families.
Eigen::VectorXd script_M(const AlphaBeta& ab, const MarketModel& model, double t,
                         const Eigen::VectorXd& y);

// Effective covariance alpha A + gamma (int alpha(t, y + gamma e) e e^T nu) gamma^T.
Eigen::MatrixXd script_S(const AlphaBeta& ab, const MarketModel& model, double t,
                         const Eigen::VectorXd& y);

double value_function(const AlphaBeta& ab, double t, double x,
                      const Eigen::VectorXd& y);

// One-dimensional no-jump closed form:
// exp(-rho^2 (T-t)) (x - what)^2
//   - (lambda/2) (rho^2 (T-t)^2 / 2 + (T-t) log(lambda pi / sigma^2)).
double wang_zhou_value(double t, double x, double rho, double sigma,
                       double lambda, double what, double T);

// Gaussian feedback law with mean -(x - what) S^{-1} M and covariance
// (lambda/2) S^{-1}.  For lambda == 0: if strict, throws
// std::invalid_argument (the entropy term degenerates); otherwise returns
// the law with covariance regularized to (epsilon/2) S^{-1} and a warning.
GaussianFeedbackLaw optimal_law(const AlphaBeta& ab, const MarketModel& model,
                                bool strict_lambda_zero = false,
                                double epsilon = 1e-8);

// Classical (zero-exploration) law: same mean, covariance identically zero.
GaussianFeedbackLaw classical_mv_law(const AlphaBeta& ab, const MarketModel& model);

// Max |residual| of the dynamic-programming equation at the probe points,
// with the optimizer plugged in and the jump integral evaluated by atom sum
// x Gauss-Hermite quadrature.  Constant-coefficient family only.
double hjb_residual(const AlphaBeta& ab, const MarketModel& model,
                    const std::vector<std::tuple<double, double, Eigen::VectorXd>>&
                        probes);

std::vector<std::tuple<double, double, Eigen::VectorXd>> default_hjb_probes(
    const MarketModel& model, double x_center);

// One simulated path of the closed-form optimal wealth machinery, built
// from one noise stream: exposure process Z, its continuous quadratic
// variation, the stochastic exponential, the auxiliary martingale M and the
// jump covariation, plus the Euler solution of the same linear SDE on the
// identical noise.
struct ExplicitPathResult {
  double exp_T = 0.0;          // stochastic exponential at T
  double integral_term = 0.0;  // int dM / E, post-jump exponential at jumps
                               // (= int dM / E_ + sum dM dZ / (E_ (1 - dZ)))
  double x_explicit_T = 0.0;
  double x_euler_T = 0.0;
  Eigen::VectorXd x_explicit_at;  // values at requested report times
};

struct ExplicitEnsembleResult {
  double mean_x_T = 0.0;
  double se_x_T = 0.0;
  double second_moment_about_what = 0.0;
  double rms_gap_euler = 0.0;  // RMS terminal gap explicit vs Euler
  double mean_exp_T = 0.0;
  Eigen::VectorXd mean_x_at;  // per report time
  Eigen::VectorXd se_x_at;
};

// Simulates `paths` paths at the given step count.  Throws
// std::runtime_error if a jump of Z of size 1 occurs (degenerate
// stochastic-exponential case, rejected up front for atom laws).
ExplicitEnsembleResult simulate_optimal_wealth_explicit(
    const MarketModel& model, const AlphaBeta& ab, double x0,
    const Eigen::VectorXd& y0, const SimConfig& cfg, double lambda, double what,
    const std::vector<double>& report_times = {});

// Per-atom jump sizes of the exposure process Z: (b^T Sigma^{-1} gamma) e.
// Used to reject atom laws with a jump of exactly 1.
std::vector<double> exposure_jump_sizes(const MarketModel& model);
void validate_exposure_jumps(const MarketModel& model, double tol = 1e-9);

// Closed-form multiplier what = (zhat e^{KT} - x0) / (e^{KT} - 1); requires
// K > 0 (std::domain_error otherwise).
double lagrange_multiplier_closed(double K, double T, double x0, double zhat);

struct MultiplierEstimate {
  double what = 0.0;
  double se = 0.0;
  double mean_exp_T = 0.0;  // Monte Carlo E[stochastic exponential at T]
};

// Monte Carlo multiplier from the explicit-solution representation, with a
// delta-method standard error.  Throws std::runtime_error if the
// denominator 1 - E[exp_T] is within 3 standard errors of 0.
MultiplierEstimate lagrange_multiplier_mc(const MarketModel& model,
                                          const AlphaBeta& ab, double x0,
                                          double zhat, const SimConfig& cfg,
                                          double lambda);

// E[X*_t] = what + (x0 - what) e^{-K t}.
double mean_wealth_curve(double K, double x0, double what, double t);

}  // namespace jumpex
