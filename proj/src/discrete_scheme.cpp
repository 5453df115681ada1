#include "jumpex/discrete_scheme.hpp"

#include <cmath>
#include <stdexcept>

#include "jumpex/linalg.hpp"
#include "jumpex/rng.hpp"

namespace jumpex {

Partition Partition::uniform(double T, int n) {
  if (n < 1) throw std::invalid_argument("Partition::uniform: need n >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("Partition::uniform: need T > 0");
  Partition p;
  p.n = n;
  p.grid = Eigen::VectorXd::LinSpaced(n + 1, 0.0, T);
  p.grid[0] = 0.0;
  p.grid[n] = T;
  return p;
}

void Partition::validate() const {
  if (n < 1 || grid.size() != n + 1)
    throw std::invalid_argument("Partition: grid size must be n + 1");
  if (grid[0] != 0.0)
    throw std::invalid_argument("Partition: grid must start at 0");
  for (int i = 0; i < n; ++i)
    if (!(grid[i + 1] > grid[i]))
      throw std::invalid_argument("Partition: grid must be strictly increasing");
}

double Partition::mesh() const {
  double m = 0.0;
  for (int i = 0; i < n; ++i) m = std::max(m, dt(i));
  return m;
}

DiscreteRandomizedControl DiscreteRandomizedControl::constant(
    const Eigen::VectorXd& m, const Eigen::MatrixXd& v, std::string label) {
  DiscreteRandomizedControl c;
  c.coeffs = [m, v](const ControlState&, Eigen::VectorXd& mm, Eigen::MatrixXd& vv) {
    mm = m;
    vv = v;
  };
  c.label = std::move(label);
  return c;
}

MomentDecomposition decompose_control(const Eigen::VectorXd& m,
                                      const Eigen::MatrixXd& v) {
  if (v.rows() != v.cols() || v.rows() != m.size())
    throw std::invalid_argument("decompose_control: dimension mismatch");
  if (std::abs(v.determinant()) < 1e-14)
    throw std::invalid_argument(
        "decompose_control: singular randomization matrix (entropy -inf)");
  MomentDecomposition d;
  d.mu = m;
  d.theta = v * v.transpose();
  d.vartheta = psd_sqrt(d.theta);
  return d;
}

Eigen::VectorXd DiscreteScenario::z_at(int i) const {
  Eigen::VectorXd z(D * D + 3 * D);
  z.segment(0, D) = W.row(i);
  z.segment(D, D * D) = M.row(i);
  z.segment(D + D * D, 2 * D) = L.row(i);
  return z;
}

DiscreteScenario simulate_discrete_scenario(const MarketModel& model,
                                            const Partition& part,
                                            const DiscreteRandomizedControl& control,
                                            double x0, const Eigen::VectorXd& y0,
                                            std::mt19937_64& rng) {
  part.validate();
  const int D = model.dim();
  const int n = part.n;
  if (y0.size() != D)
    throw std::invalid_argument("simulate_discrete_scenario: y0 dimension mismatch");

  DiscreteScenario s;
  s.part = part;
  s.D = D;
  s.dW.resize(n, D);
  s.xi.resize(n, D);
  s.dJ_raw.setZero(n, D);
  s.dJ.resize(n, D);
  s.W.setZero(n + 1, D);
  s.M.setZero(n + 1, D * D);
  s.L.setZero(n + 1, 2 * D);
  s.Y.resize(n + 1, D);
  s.X.resize(n + 1);
  s.Y.row(0) = y0;
  s.X[0] = x0;

  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::VectorXd comp = model.jumps.nu_m1();  // intensity * m1

  ControlState state;
  Eigen::VectorXd m(D), h(D), dy(D), jump_sum(D);
  Eigen::MatrixXd v(D, D);

  for (int i = 0; i < n; ++i) {
    const double dt = part.dt(i);
    const double sq = std::sqrt(dt);
    for (int d = 0; d < D; ++d) s.dW(i, d) = sq * normal(rng);
    for (int d = 0; d < D; ++d) s.xi(i, d) = normal(rng);

    jump_sum.setZero();
    if (model.jumps.active()) {
      std::poisson_distribution<int> pois(model.jumps.intensity * dt);
      const int k = pois(rng);
      for (int j = 0; j < k; ++j) jump_sum += model.jumps.sample(rng);
    }
    s.dJ_raw.row(i) = jump_sum;
    s.dJ.row(i) = jump_sum - dt * comp;

    // Stacked integrator recursions (exploration draws play the linear
    // weight in the Brownian sheet block).
    s.W.row(i + 1) = s.W.row(i) + s.dW.row(i);
    for (int d = 0; d < D; ++d)
      for (int dp = 0; dp < D; ++dp)
        s.M(i + 1, d * D + dp) = s.M(i, d * D + dp) + s.xi(i, d) * s.dW(i, dp);
    const double damp = psi(model.damping, Eigen::VectorXd(s.dJ.row(i)));
    s.L.row(i + 1).segment(0, D) = s.L.row(i).segment(0, D) + s.dJ.row(i);
    s.L.row(i + 1).segment(D, D) =
        s.L.row(i).segment(D, D) + damp * s.xi.row(i);

    // Euler recursion for the state and the randomized-control wealth.
    state.t = part.grid[i];
    state.x = s.X[i];
    state.y = s.Y.row(i);
    state.step = i;
    control.coeffs(state, m, v);
    h.noalias() = v * Eigen::VectorXd(s.xi.row(i));
    h += m;

    const Eigen::VectorXd b = model.coeffs.b(state.y);
    const Eigen::MatrixXd a = model.coeffs.a(state.y);
    const Eigen::MatrixXd g = model.coeffs.gamma(state.y);
    dy = b * dt;
    dy.noalias() += a * Eigen::VectorXd(s.dW.row(i));
    dy.noalias() += g * Eigen::VectorXd(s.dJ.row(i));
    s.Y.row(i + 1) = s.Y.row(i) + dy.transpose();
    s.X[i + 1] = s.X[i] + h.dot(dy);
  }
  return s;
}

ScenarioSource make_scenario_source(const MarketModel& model, const Partition& part,
                                    const DiscreteRandomizedControl& control,
                                    double x0, Eigen::VectorXd y0,
                                    std::uint64_t master_seed) {
  return [model, part, control, x0, y0 = std::move(y0),
          master_seed](std::size_t path_index) {
    std::mt19937_64 rng =
        make_stream(master_seed, path_index, purpose::discrete_scenario);
    return simulate_discrete_scenario(model, part, control, x0, y0, rng);
  };
}

std::pair<double, double> lln_drift_statistic(const ScenarioSource& source,
                                              std::size_t paths, double t) {
  if (paths == 0)
    throw std::invalid_argument("lln_drift_statistic: need at least one path");
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t p = 0; p < paths; ++p) {
    const DiscreteScenario s = source(p);
    const int D = s.D;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(D);
    for (int i = 0; i < s.part.n; ++i) {
      if (s.part.grid[i + 1] > t + 1e-12) break;
      acc += s.part.dt(i) * Eigen::VectorXd(s.xi.row(i));
    }
    const double stat = acc.squaredNorm() / D;
    sum += stat;
    sum_sq += stat * stat;
  }
  const double mean = sum / static_cast<double>(paths);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(paths) - mean * mean);
  const double se = std::sqrt(var / static_cast<double>(paths));
  return {mean, se};
}

}  // namespace jumpex
