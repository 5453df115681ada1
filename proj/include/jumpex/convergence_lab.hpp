#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "jumpex/discrete_scheme.hpp"
#include "jumpex/market_model.hpp"

namespace jumpex {

// Probe points in R^{D^2+3D} and evaluation times for characteristic-
// function comparisons.  Always contains u = 0 and norms spanning at least
// two orders of magnitude.
struct ProbeGrid {
  std::vector<Eigen::VectorXd> probes;
  std::vector<std::string> labels;  // block tag per probe (for reports)
  std::vector<double> times;

  void validate() const;
};

// 24 probes stratified by block (Brownian, sheet, jump, mark, mixed) with
// norms 0.25 .. 25.
ProbeGrid default_probe_grid(int D, std::vector<double> times = {0.5, 1.0});

struct CfEstimate {
  std::complex<double> value;
  double se = 0.0;  // sqrt((Var cos + Var sin) / N) <= 1/sqrt(N)
};

// (1/N) sum exp(i u . z) with componentwise standard error.  Requires at
// least one sample.
CfEstimate empirical_cf(const Eigen::MatrixXd& samples, const Eigen::VectorXd& u);

struct CfCell {
  int n = 0;
  double t = 0.0;
  int probe = 0;
  std::string block;
  std::complex<double> empirical;
  std::complex<double> limit;
  double gap = 0.0;
  double se = 0.0;
  bool pass = false;
};

struct ConvergenceReport {
  std::vector<int> n_family;
  ProbeGrid grid;
  std::vector<CfCell> cells;
  double gap_tolerance = 0.02;  // finest-grid pass: gap <= tol + 3 se
  bool finest_pass = false;     // every probe passes at the finest grid
  bool trend_pass = false;      // gaps non-increasing within 2 combined se
  bool pass = false;

  const CfCell& cell(int n_index, int time_index, int probe_index) const;
};

// Simulates the stacked integrator at each grid size in n_family (fresh
// paths per n, streams split by (seed, path)) and compares the empirical CF
// of Z^n_t against exp(-t kappa(u)) at every probe and time.
ConvergenceReport cf_convergence_study(const MarketModel& model,
                                       const std::vector<int>& n_family,
                                       const ProbeGrid& grid, std::size_t paths,
                                       std::uint64_t seed,
                                       double gap_tolerance = 0.02);

// Bounded continuous test function vanishing on a ball around the origin:
// g(z) = taper_rise(||z||) * q(z) where taper_rise goes 0 -> 1 between
// `inner` and `outer`, and q is either 1 (power = 0) or the capped squared
// norm of the (jump, mark) sub-vector (power = 2).
struct VanishingTestFunction {
  double inner = 0.05;
  double outer = 0.1;
  int power = 0;     // 0 or 2
  double cap = 4.0;  // bound for the power-2 factor

  void validate() const;  // inner > 0, outer > inner
  double operator()(const Eigen::VectorXd& z, int D) const;
};

struct JumpFunctionalResult {
  double statistic = 0.0;  // sum_i mean g(step increment of Z^n), t_i <= t
  double se = 0.0;
  double analytic = 0.0;  // t * integral of g(0, e, u) against the
                          // augmented jump measure (atom sum x quadrature)
  double gap = 0.0;
};

JumpFunctionalResult jump_functional_check(const MarketModel& model,
                                           const ScenarioSource& source,
                                           std::size_t paths, double t,
                                           const VanishingTestFunction& g);

// Componentwise truncation h(z) = z * smoothstep taper of ||z|| with the
// fixed radii (1 inside `inner`, 0 outside `outer`).
struct Truncation {
  double inner = 0.5;
  double outer = 1.0;
  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const;
};

struct CharacteristicsCell {
  int k = 0, l = -1;  // l < 0: drift row (component k); else covariance (k,l)
  double empirical = 0.0;
  double se = 0.0;
  double analytic = 0.0;
  double gap = 0.0;
};

struct CharacteristicsReport {
  double t = 0.0;
  std::vector<CharacteristicsCell> drift;       // sum_i E h(dZ) vs drift part
  std::vector<CharacteristicsCell> covariance;  // sum_i E[h^k h^l] vs modified
                                                // second characteristic
  double max_drift_zscore = 0.0;
  double max_cov_zscore = 0.0;
};

CharacteristicsReport characteristics_check(const MarketModel& model,
                                            const ScenarioSource& source,
                                            std::size_t paths, double t,
                                            const Truncation& h);

struct IndependenceReport {
  double max_abs_corr = 0.0;
  double corr_se = 0.0;
  double max_cf_gap = 0.0;  // max over probe pairs of |CF_joint - CF_a CF_b|
  double cf_gap_se = 0.0;
};

// Cross-dependence diagnostics between two sample blocks (rows = paths):
// max absolute cross-correlation and max joint-CF factorization gap over 8
// probe pairs.
IndependenceReport independence_check(const Eigen::MatrixXd& brownian_block,
                                      const Eigen::MatrixXd& jump_block);

}  // namespace jumpex
