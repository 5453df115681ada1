#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jumpex/market_model.hpp"

namespace jumpex {

struct Partition {
  Eigen::VectorXd grid;  // 0 = t_0 < t_1 < ... < t_n = T
  int n = 0;

  static Partition uniform(double T, int n);
  void validate() const;  // strictly increasing, endpoints 0 and T
  double dt(int i) const { return grid[i + 1] - grid[i]; }
  double mesh() const;
};

// State visible to a randomized control at the left endpoint of a step.
struct ControlState {
  double t = 0.0;
  double x = 0.0;
  Eigen::VectorXd y;
  int step = 0;
};

// Per-step linear randomized control H(u) = m + v u with v symmetric
// positive definite; (m, v) may depend on the adapted state only.
struct DiscreteRandomizedControl {
  std::function<void(const ControlState&, Eigen::VectorXd& m, Eigen::MatrixXd& v)>
      coeffs;
  std::string label;

  static DiscreteRandomizedControl constant(const Eigen::VectorXd& m,
                                            const Eigen::MatrixXd& v,
                                            std::string label = "constant");
};

// Conditional moments of H(xi): mean mu, covariance theta = v v^T and its
// symmetric PSD square root vartheta.
struct MomentDecomposition {
  Eigen::VectorXd mu;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd vartheta;
};

// theta = v v^T, vartheta = psd_sqrt(theta).  Throws std::invalid_argument
// if v is singular (the randomized control would have differential entropy
// -infinity).
MomentDecomposition decompose_control(const Eigen::VectorXd& m,
                                      const Eigen::MatrixXd& v);

// One simulated discrete scenario: all noise increments, the stacked
// integrator paths and the Euler state/wealth recursions.
struct DiscreteScenario {
  Partition part;
  int D = 0;
  Eigen::MatrixXd dW;        // n x D Brownian increments
  Eigen::MatrixXd xi;        // n x D exploration draws
  Eigen::MatrixXd dJ_raw;    // n x D raw jump sums per step
  Eigen::MatrixXd dJ;        // n x D compensated: raw - dt * intensity * m1
  Eigen::MatrixXd W;         // (n+1) x D cumulative Brownian path
  Eigen::MatrixXd M;         // (n+1) x D^2 exploration-Brownian integrator
  Eigen::MatrixXd L;         // (n+1) x 2D stacked (jump, damped-mark) path
  Eigen::MatrixXd Y;         // (n+1) x D Euler state path
  Eigen::VectorXd X;         // (n+1) wealth path
  // Stacked integrator vector [W | M | L] at grid index i.
  Eigen::VectorXd z_at(int i) const;
};

// Simulates one scenario.  Brownian increments ~ N(0, dt I); per-step jump
// sums are the exact sums of all compound-Poisson jumps in the interval;
// exploration draws are i.i.d. N(0, I) independent of everything else.
// Identical (rng state, inputs) give bit-identical scenarios.
DiscreteScenario simulate_discrete_scenario(const MarketModel& model,
                                            const Partition& part,
                                            const DiscreteRandomizedControl& control,
                                            double x0, const Eigen::VectorXd& y0,
                                            std::mt19937_64& rng);

// Deterministic path-indexed scenario factory (make_stream(seed, path, tag)).
using ScenarioSource = std::function<DiscreteScenario(std::size_t path_index)>;

ScenarioSource make_scenario_source(const MarketModel& model, const Partition& part,
                                    const DiscreteRandomizedControl& control,
                                    double x0, Eigen::VectorXd y0,
                                    std::uint64_t master_seed);

// Monte Carlo estimate (value, standard error) of
// E | sum_{t_i <= t} xi_i^(d) dt_i |^2, averaged over coordinates d.
// On a uniform grid with t = T the exact value is T^2 / n.
std::pair<double, double> lln_drift_statistic(const ScenarioSource& source,
                                              std::size_t paths, double t);

}  // namespace jumpex
