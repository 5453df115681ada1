#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jumpex/market_model.hpp"

namespace jumpex {

// Gaussian feedback law: mean may depend on (t, x, y), covariance on (t, y).
// The optional structure flags let the simulator use a cached fast path for
// laws whose covariance ignores y and whose mean is affine in x:
//   mean(t, x, y) = mean0(t, y) + x * mean_x(t, y).
struct GaussianFeedbackLaw {
  std::function<Eigen::VectorXd(double, double, const Eigen::VectorXd&)> mean;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> cov;
  std::string label;

  bool cov_time_only = false;
  bool mean_affine_in_x = false;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> mean0;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> mean_x;

  static GaussianFeedbackLaw constant(const Eigen::VectorXd& m,
                                      const Eigen::MatrixXd& v,
                                      std::string label = "constant");
};

// Scales the mean and covariance of a structured law.
GaussianFeedbackLaw scale_law(const GaussianFeedbackLaw& base, double mean_factor,
                              double cov_factor, std::string label);

struct SimConfig {
  int steps = 512;
  std::size_t paths = 100000;
  std::uint64_t seed = 1;
};

struct CostEstimate {
  double value = 0.0;  // estimate of the entropy-regularized quadratic cost
  double se = 0.0;
  double terminal_mean = 0.0;
  double terminal_mean_se = 0.0;
  double terminal_second_moment = 0.0;  // E[(X_T - what)^2]
  double entropy_integral_mean = 0.0;   // E[int_0^T entropy rate dt]
};

// Euler simulation of the exploratory wealth/state pair between exact
// compound-Poisson epochs:
//   drift      mu^T b - mu^T gamma * intensity * m1  (jump compensator)
//   diffusion  mu^T a dW + tr[Theta^{1/2} a dSheet^T]
//   jump       dX = (mu + Theta^{1/2} xi)^T gamma e,  dY = gamma e.
// Cost accumulates (X_T - what)^2 - lambda * (Gaussian entropy integral),
// the entropy integrated in closed form per step (midpoint in t, left in y).
// Throws std::runtime_error naming (t, y) if lambda > 0 and the covariance
// at a visited state is not positive definite.
CostEstimate simulate_exploratory(const MarketModel& model,
                                  const GaussianFeedbackLaw& law, double x0,
                                  const Eigen::VectorXd& y0, const SimConfig& cfg,
                                  double what, double lambda,
                                  std::vector<double>* terminal_out = nullptr);

// Differential entropy of the law's Gaussian at (t, x, y):
// (D/2) ln(2 pi e) + 0.5 ln det cov(t, y).  Returns -infinity for a
// singular covariance (and emits a warning once).
double entropy_rate(const GaussianFeedbackLaw& law, double t, double x,
                    const Eigen::VectorXd& y);

struct AdmissibilityDiagnostics {
  double max_integrand = 0.0;
  double mean_integrand = 0.0;
  bool finite = true;
};

// Evaluates the quadratic integrability integrand
//   mu^T Sigma mu + tr[Sigma Theta]
// (diffusion part plus the jump part in closed form) at the given states.
AdmissibilityDiagnostics admissibility_probe(
    const MarketModel& model, const GaussianFeedbackLaw& law,
    const std::vector<std::tuple<double, double, Eigen::VectorXd>>& states);

}  // namespace jumpex
