#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "jumpex/discrete_scheme.hpp"
#include "jumpex/market_model.hpp"
#include "jumpex/rng.hpp"

using namespace jumpex;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

MarketModel canonical_model() {
  MarketModel model;
  model.T = 1.0;
  model.coeffs = CoefficientField::constant(
      vec1(0.3), Eigen::MatrixXd::Constant(1, 1, 0.2),
      Eigen::MatrixXd::Constant(1, 1, 1.0));
  model.jumps = JumpSpec::atoms(1.0, {vec1(0.1), vec1(-0.1)}, {0.5, 0.5});
  model.damping.c = 0.5;
  return model;
}

DiscreteRandomizedControl unit_control(int D) {
  return DiscreteRandomizedControl::constant(Eigen::VectorXd::Zero(D),
                                             Eigen::MatrixXd::Identity(D, D),
                                             "unit");
}

}  // namespace

TEST_CASE("uniform partition: endpoints, mesh, validation") {
  const Partition part = Partition::uniform(2.0, 8);
  CHECK(part.n == 8);
  CHECK(part.grid[0] == 0.0);
  CHECK(part.grid[8] == 2.0);
  CHECK(part.mesh() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(part.dt(3) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_NOTHROW(part.validate());

  CHECK_THROWS_AS(Partition::uniform(1.0, 0), std::invalid_argument);
  Partition bad = part;
  bad.grid[4] = bad.grid[5];  // not strictly increasing
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("control moment decomposition: frozen oracle and singular rejection") {
  Eigen::VectorXd m(2);
  m << 1.0, 2.0;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2, 2);
  v(0, 0) = 0.5;
  v(1, 1) = 2.0;
  const MomentDecomposition dec = decompose_control(m, v);
  CHECK((dec.mu - m).norm() == 0.0);
  CHECK(dec.theta(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(dec.theta(1, 1) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(dec.theta(0, 1) == doctest::Approx(0.0));
  CHECK((dec.vartheta * dec.vartheta - dec.theta).norm() < 1e-12);

  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
  singular(0, 0) = 1.0;  // rank 1
  CHECK_THROWS_WITH_AS(decompose_control(m, singular),
                       doctest::Contains("entropy"), std::invalid_argument);
}

TEST_CASE("scenario recursions reconstruct exactly from the stored increments") {
  const MarketModel model = canonical_model();
  const Partition part = Partition::uniform(model.T, 32);
  Eigen::VectorXd mc(1);
  mc << 0.4;
  Eigen::MatrixXd vc(1, 1);
  vc << 1.3;
  const DiscreteRandomizedControl control =
      DiscreteRandomizedControl::constant(mc, vc, "affine");
  std::mt19937_64 rng = make_stream(7, 0, purpose::discrete_scenario);
  const DiscreteScenario s =
      simulate_discrete_scenario(model, part, control, 1.0, vec1(0.0), rng);

  REQUIRE(s.part.n == 32);
  const Eigen::VectorXd b = model.coeffs.b_const;
  const Eigen::MatrixXd a = model.coeffs.a_const;
  const Eigen::MatrixXd g = model.coeffs.gamma_const;
  double x = 1.0;
  Eigen::VectorXd y = vec1(0.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(1);
  double m_sheet = 0.0, jacc = 0.0, mark = 0.0;
  for (int i = 0; i < 32; ++i) {
    const double dt = part.dt(i);
    const Eigen::VectorXd dW = s.dW.row(i).transpose();
    const Eigen::VectorXd xi = s.xi.row(i).transpose();
    const Eigen::VectorXd dJ = s.dJ.row(i).transpose();
    CHECK(s.dJ(i, 0) ==
          doctest::Approx(s.dJ_raw(i, 0) -
                          dt * model.jumps.intensity * model.jumps.m1[0])
              .epsilon(1e-14));
    const Eigen::VectorXd dy = b * dt + a * dW + g * dJ;
    const Eigen::VectorXd h = mc + vc * xi;
    x += h.dot(dy);
    y += dy;
    w += dW;
    m_sheet += xi[0] * dW[0];
    jacc += dJ[0];
    mark += psi(model.damping, dJ) * xi[0];
    CHECK(s.X[i + 1] == doctest::Approx(x).epsilon(1e-12));
    CHECK(s.Y(i + 1, 0) == doctest::Approx(y[0]).epsilon(1e-12));
    CHECK(s.W(i + 1, 0) == doctest::Approx(w[0]).epsilon(1e-12));
    CHECK(s.M(i + 1, 0) == doctest::Approx(m_sheet).epsilon(1e-12));
    CHECK(s.L(i + 1, 0) == doctest::Approx(jacc).epsilon(1e-12));
    CHECK(s.L(i + 1, 1) == doctest::Approx(mark).epsilon(1e-12));
  }

  // Stacked layout [W | sheet | jump | mark].
  const Eigen::VectorXd z = s.z_at(32);
  CHECK(z.size() == 4);
  CHECK(z[0] == s.W(32, 0));
  CHECK(z[1] == s.M(32, 0));
  CHECK(z[2] == s.L(32, 0));
  CHECK(z[3] == s.L(32, 1));
}

TEST_CASE("scenario source is deterministic in (seed, path index)") {
  const MarketModel model = canonical_model();
  const Partition part = Partition::uniform(model.T, 16);
  const ScenarioSource src_a =
      make_scenario_source(model, part, unit_control(1), 1.0, vec1(0.0), 42);
  const ScenarioSource src_b =
      make_scenario_source(model, part, unit_control(1), 1.0, vec1(0.0), 42);
  const DiscreteScenario s1 = src_a(5);
  const DiscreteScenario s2 = src_b(5);
  CHECK((s1.X - s2.X).norm() == 0.0);
  CHECK((s1.Y - s2.Y).norm() == 0.0);
  CHECK((s1.M - s2.M).norm() == 0.0);
  CHECK((s1.L - s2.L).norm() == 0.0);

  const DiscreteScenario s3 = src_a(6);
  CHECK((s1.X - s3.X).norm() > 0.0);  // distinct paths differ

  const ScenarioSource src_c =
      make_scenario_source(model, part, unit_control(1), 1.0, vec1(0.0), 43);
  const DiscreteScenario s4 = src_c(5);
  CHECK((s1.X - s4.X).norm() > 0.0);  // distinct seeds differ
}

TEST_CASE("stacked integrator does not depend on the control") {
  const MarketModel model = canonical_model();
  const Partition part = Partition::uniform(model.T, 16);
  Eigen::VectorXd m2v(1);
  m2v << -3.0;
  Eigen::MatrixXd v2(1, 1);
  v2 << 0.25;
  const ScenarioSource src_a =
      make_scenario_source(model, part, unit_control(1), 1.0, vec1(0.0), 42);
  const ScenarioSource src_b = make_scenario_source(
      model, part, DiscreteRandomizedControl::constant(m2v, v2, "other"), 1.0,
      vec1(0.0), 42);
  for (std::size_t p : {0u, 3u}) {
    const DiscreteScenario sa = src_a(p);
    const DiscreteScenario sb = src_b(p);
    CHECK((sa.W - sb.W).norm() == 0.0);
    CHECK((sa.M - sb.M).norm() == 0.0);
    CHECK((sa.L - sb.L).norm() == 0.0);
    CHECK((sa.X - sb.X).norm() > 0.0);  // wealth does depend on the control
  }
}

TEST_CASE("block moments of the stacked integrator match their laws") {
  const MarketModel model = canonical_model();
  const int n = 64;
  const Partition part = Partition::uniform(model.T, n);
  const ScenarioSource src =
      make_scenario_source(model, part, unit_control(1), 1.0, vec1(0.0), 99);
  const int N = 4000;
  double w2 = 0.0, m2 = 0.0, j1 = 0.0, j2 = 0.0, mk2 = 0.0, mw = 0.0;
  double j2sq = 0.0;
  for (int p = 0; p < N; ++p) {
    const DiscreteScenario s = src(p);
    const Eigen::VectorXd z = s.z_at(n);
    w2 += z[0] * z[0];
    m2 += z[1] * z[1];
    j1 += z[2];
    j2 += z[2] * z[2];
    j2sq += std::pow(z[2] * z[2], 2);
    mk2 += z[3] * z[3];
    mw += z[0] * z[1];
  }
  w2 /= N; m2 /= N; j1 /= N; j2 /= N; mk2 /= N; mw /= N; j2sq /= N;

  // Var(W_T) = T, Var(M_T) = sum E[xi^2] dt = T (independent products),
  // Var(J_T) = nu T E[e^2] = 0.01, Var(mark_T) = nu T E[psi^2].
  CHECK(w2 == doctest::Approx(1.0).epsilon(0.1));
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.1));
  const double se_j2 = std::sqrt(std::max(0.0, j2sq - j2 * j2) / N);
  CHECK(std::abs(j1) < 4.0 * std::sqrt(j2 / N));          // compensated mean 0
  CHECK(std::abs(j2 - 0.01) < 4.0 * se_j2 + 1e-5);
  CHECK(mk2 == doctest::Approx(9.804864072152e-05).epsilon(0.25));
  CHECK(std::abs(mw) < 4.0 * std::sqrt(2.0 / N));          // orthogonal blocks
}

TEST_CASE("compensation removes the jump drift for an asymmetric law") {
  MarketModel model = canonical_model();
  model.jumps = JumpSpec::uniform_box(0.5, vec1(-0.2), vec1(0.6));
  const int n = 32;
  const Partition part = Partition::uniform(model.T, n);
  const ScenarioSource src =
      make_scenario_source(model, part, unit_control(1), 1.0, vec1(0.0), 17);
  const int N = 4000;
  double mean = 0.0, second = 0.0, raw_mean = 0.0;
  for (int p = 0; p < N; ++p) {
    const DiscreteScenario s = src(p);
    mean += s.L(n, 0);
    second += s.L(n, 0) * s.L(n, 0);
    raw_mean += s.dJ_raw.col(0).sum();
  }
  mean /= N;
  second /= N;
  raw_mean /= N;
  const double se = std::sqrt(std::max(0.0, second - mean * mean) / N);
  CHECK(std::abs(mean) < 4.0 * se);
  // Raw (uncompensated) drift is nu T m1 = 0.5 * 0.2 = 0.1.
  CHECK(raw_mean == doctest::Approx(0.1).epsilon(0.25));
}

TEST_CASE("time-averaged exploration noise shrinks like the mesh") {
  const MarketModel model = canonical_model();
  double prev = 1e300;
  for (int n : {16, 64, 256}) {
    const Partition part = Partition::uniform(model.T, n);
    const ScenarioSource src =
        make_scenario_source(model, part, unit_control(1), 1.0, vec1(0.0), 5);
    const auto [stat, se] = lln_drift_statistic(src, 2000, model.T);
    const double exact = model.T * model.T / n;
    CHECK(std::abs(stat - exact) < 5.0 * se);
    CHECK(stat < prev);
    prev = stat;
  }
}

TEST_CASE("lln statistic respects the time argument on the grid") {
  const MarketModel model = canonical_model();
  const Partition part = Partition::uniform(model.T, 64);
  const ScenarioSource src =
      make_scenario_source(model, part, unit_control(1), 1.0, vec1(0.0), 6);
  const auto [stat_half, se_half] = lln_drift_statistic(src, 2000, 0.5);
  // Sum over the first 32 steps: E = 32 * dt^2 = 32 / 4096 = 1/128.
  CHECK(std::abs(stat_half - 1.0 / 128.0) < 5.0 * se_half);
}
