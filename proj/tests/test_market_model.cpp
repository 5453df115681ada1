#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "jumpex/linalg.hpp"
#include "jumpex/market_model.hpp"
#include "jumpex/quadrature.hpp"
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

MarketModel model_2d() {
  MarketModel model;
  model.T = 1.0;
  Eigen::VectorXd b(2);
  b << 0.1, 0.2;
  Eigen::MatrixXd a(2, 2);
  a << 0.3, 0.0, 0.1, 0.25;
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
  model.coeffs = CoefficientField::constant(b, a, g);
  Eigen::VectorXd mean(2);
  mean << 0.05, -0.02;
  model.jumps = JumpSpec::gaussian(0.8, mean, 0.3);
  model.damping.c = 0.5;
  return model;
}

}  // namespace

TEST_CASE("damping function: frozen values, zero at zero, contraction") {
  Damping d;  // c = 0.5
  CHECK(psi(d, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(psi(d, 1.0) == doctest::Approx(0.6180339887498949).epsilon(1e-12));
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  CHECK(psi(d, x) == doctest::Approx(4.52493781056045).epsilon(1e-12));
  // |psi'(x)| = |x| / sqrt(x^2 + c^2) < 1 and psi(x) <= |x|.
  for (double t : {0.01, 0.1, 1.0, 10.0, 1000.0}) {
    const double h = 1e-6 * std::max(1.0, t);
    const double deriv = (psi(d, t + h) - psi(d, t - h)) / (2.0 * h);
    CHECK(std::abs(deriv) < 1.0);
    CHECK(psi(d, t) <= t);
  }
}

TEST_CASE("jump law moments match factory values and Monte Carlo") {
  auto check_mc = [](const JumpSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng = make_stream(seed, 0, purpose::synthetic);
    const int N = 40000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(spec.D);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(spec.D, spec.D);
    Eigen::VectorXd sq_mean = Eigen::VectorXd::Zero(spec.D);
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd e = spec.sample(rng);
      mean += e;
      second += e * e.transpose();
      sq_mean += e.cwiseProduct(e);
    }
    mean /= N;
    second /= N;
    for (int d = 0; d < spec.D; ++d) {
      const double sd = std::sqrt(std::max(0.0, sq_mean[d] / N -
                                                    (mean[d] + spec.m1[d]) *
                                                        mean[d]));
      const double se = std::max(1e-12, sd / std::sqrt(double(N)));
      CHECK(std::abs(mean[d] - spec.m1[d]) < 5.0 * se + 1e-3);
      for (int dp = 0; dp < spec.D; ++dp)
        CHECK(std::abs(second(d, dp) - spec.m2(d, dp)) < 0.02);
    }
  };

  SUBCASE("atoms") {
    const JumpSpec spec =
        JumpSpec::atoms(1.0, {vec1(0.1), vec1(-0.1)}, {0.5, 0.5});
    CHECK(spec.m1[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(spec.m2(0, 0) == doctest::Approx(0.01).epsilon(1e-14));
    check_mc(spec, 11);
  }
  SUBCASE("gaussian") {
    Eigen::VectorXd mean(2);
    mean << 0.05, -0.02;
    const JumpSpec spec = JumpSpec::gaussian(0.8, mean, 0.3);
    CHECK(spec.m1[0] == doctest::Approx(0.05));
    CHECK(spec.m2(0, 0) == doctest::Approx(0.05 * 0.05 + 0.09).epsilon(1e-12));
    CHECK(spec.m2(0, 1) == doctest::Approx(0.05 * -0.02).epsilon(1e-12));
    check_mc(spec, 12);
  }
  SUBCASE("uniform box") {
    const JumpSpec spec = JumpSpec::uniform_box(0.5, vec1(-0.2), vec1(0.6));
    CHECK(spec.m1[0] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(spec.m2(0, 0) ==
          doctest::Approx(0.2 * 0.2 + 0.8 * 0.8 / 12.0).epsilon(1e-12));
    check_mc(spec, 13);
  }
}

TEST_CASE("law_expectation is exact for polynomials in each law") {
  const JumpSpec atoms =
      JumpSpec::atoms(1.0, {vec1(0.1), vec1(-0.1)}, {0.5, 0.5});
  CHECK(atoms.law_expectation([](const Eigen::VectorXd& e) {
          return e[0] * e[0];
        }) == doctest::Approx(0.01).epsilon(1e-14));

  const JumpSpec gauss = JumpSpec::gaussian(1.0, vec1(0.3), 0.5);
  CHECK(gauss.law_expectation([](const Eigen::VectorXd& e) {
          return e[0] * e[0];
        }) == doctest::Approx(0.09 + 0.25).epsilon(1e-12));
  CHECK(gauss.law_expectation([](const Eigen::VectorXd& e) {
          return e[0] * e[0] * e[0];
        }) == doctest::Approx(0.3 * 0.3 * 0.3 + 3.0 * 0.3 * 0.25).epsilon(1e-10));

  const JumpSpec unif = JumpSpec::uniform_box(1.0, vec1(-1.0), vec1(3.0));
  CHECK(unif.law_expectation([](const Eigen::VectorXd& e) {
          return e[0];
        }) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("damped second moment of the canonical law") {
  const MarketModel model = canonical_model();
  const double got = model.jumps.law_expectation([&](const Eigen::VectorXd& e) {
    const double p = psi(model.damping, e);
    return p * p;
  });
  CHECK(got == doctest::Approx(9.804864072152e-05).epsilon(1e-9));
}

TEST_CASE("mark-augmented jump measure is square integrable with explicit bound") {
  // integral (||e||^2 + ||v||^2) d nu^psi = nu (E||e||^2 + D E[psi(e)^2])
  // and psi(e) <= ||e|| gives the bound (1 + D) * nu * E||e||^2.
  for (const MarketModel& model : {canonical_model(), model_2d()}) {
    const int D = model.dim();
    const double e2 = model.jumps.law_expectation(
        [](const Eigen::VectorXd& e) { return e.squaredNorm(); });
    const double psi2 = model.jumps.law_expectation([&](const Eigen::VectorXd& e) {
      const double p = psi(model.damping, e);
      return p * p;
    });
    const double lhs = model.jumps.intensity * (e2 + D * psi2);
    const double bound = (1.0 + D) * model.jumps.intensity * e2;
    CHECK(lhs <= bound + 1e-12);

    // Monte Carlo agreement for the same integral via sample_augmented_jump.
    std::mt19937_64 rng = make_stream(21, 0, purpose::synthetic);
    const int N = 40000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < N; ++i) {
      const auto [e, v] = sample_augmented_jump(model, rng);
      const double s = e.squaredNorm() + v.squaredNorm();
      acc += s;
      acc2 += s * s;
    }
    const double mean = acc / N;
    const double se =
        std::sqrt(std::max(0.0, acc2 / N - mean * mean) / double(N));
    CHECK(std::abs(model.jumps.intensity * mean - lhs) <=
          model.jumps.intensity * 4.0 * se + 1e-4);
  }
}

TEST_CASE("controlled covariance: canonical value and dimension-2 value") {
  const MarketModel model = canonical_model();
  const Eigen::MatrixXd sigma = sigma_matrix(model, Eigen::VectorXd::Zero(1));
  CHECK(sigma(0, 0) == doctest::Approx(0.05).epsilon(1e-14));

  // D = 2, a = I, gamma = I, centered unit-variance jumps at intensity 1:
  // Sigma = I + I = 2 I.
  MarketModel iso;
  iso.coeffs = CoefficientField::constant(Eigen::VectorXd::Zero(2),
                                          Eigen::MatrixXd::Identity(2, 2),
                                          Eigen::MatrixXd::Identity(2, 2));
  iso.jumps = JumpSpec::gaussian(1.0, Eigen::VectorXd::Zero(2), 1.0);
  const Eigen::MatrixXd sigma2 = sigma_matrix(iso, Eigen::VectorXd::Zero(2));
  CHECK((sigma2 - 2.0 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);

  // Degenerate diffusion and no jumps -> not positive definite.
  MarketModel bad;
  bad.coeffs = CoefficientField::constant(vec1(0.3),
                                          Eigen::MatrixXd::Zero(1, 1),
                                          Eigen::MatrixXd::Constant(1, 1, 1.0));
  bad.jumps = JumpSpec::none(1);
  CHECK_THROWS_WITH_AS(sigma_matrix(bad, Eigen::VectorXd::Zero(1)),
                       doctest::Contains("not positive definite"),
                       std::runtime_error);
}

TEST_CASE("jumps enlarge the covariance: determinant and inverse ordering") {
  const MarketModel model = model_2d();
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  const Eigen::MatrixXd A = model.coeffs.A(y);
  const Eigen::MatrixXd S = sigma_matrix(model, y);
  CHECK(is_psd(S - A, 1e-10));
  CHECK(A.determinant() <= S.determinant() + 1e-14);
  const Eigen::MatrixXd diff =
      A.inverse() - S.inverse();  // must be PSD: S^{-1} <= A^{-1}
  CHECK(is_psd(0.5 * (diff + diff.transpose()), 1e-10));
}

TEST_CASE("limit characteristic exponent: frozen probes") {
  const MarketModel model = canonical_model();
  auto kappa = [&](double uW, double uM, double uJ, double uX) {
    Eigen::VectorXd u(4);
    u << uW, uM, uJ, uX;
    return limit_char_exponent(model, u);
  };
  CHECK(std::abs(kappa(0, 0, 0, 0)) < 1e-14);
  CHECK(kappa(1, 0, 0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(kappa(0, 1, 0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
  const auto kj = kappa(0, 0, 5, 0);
  CHECK(kj.real() == doctest::Approx(0.122417438110).epsilon(1e-9));
  CHECK(std::abs(kj.imag()) < 1e-12);  // symmetric size law
  CHECK(kappa(0, 0, 0, 2).real() ==
        doctest::Approx(1.960780556278e-04).epsilon(1e-9));
  CHECK(kappa(0, 0, 5, 2).real() ==
        doctest::Approx(0.12258951279201558).epsilon(1e-9));

  // Asymmetric law: a single atom at +0.1 gives a nonzero imaginary part
  // -sin(0.5) + 0.5 at u_J = 5.
  MarketModel asym = model;
  asym.jumps = JumpSpec::atoms(1.0, {vec1(0.1)}, {1.0});
  Eigen::VectorXd u(4);
  u << 0, 0, 5, 0;
  const auto ka = limit_char_exponent(asym, u);
  CHECK(ka.imag() == doctest::Approx(0.5 - std::sin(0.5)).epsilon(1e-10));
}

TEST_CASE("limit characteristic exponent agrees with direct simulation of the limit law") {
  const MarketModel model = canonical_model();
  const double t = 0.7;
  Eigen::VectorXd u(4);
  u << 0.3, -0.5, 2.0, 1.0;
  const std::complex<double> target =
      std::exp(-t * limit_char_exponent(model, u));

  // The limit triple at time t: two independent Brownian blocks, a
  // compensated compound Poisson block and its damped-mark block.
  std::mt19937_64 rng = make_stream(31, 0, purpose::synthetic);
  std::normal_distribution<double> normal;
  std::poisson_distribution<int> pois(model.jumps.intensity * t);
  const int N = 40000;
  std::complex<double> acc{0.0, 0.0};
  const Eigen::VectorXd comp = t * model.jumps.nu_m1();
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
    z[0] = std::sqrt(t) * normal(rng);
    z[1] = std::sqrt(t) * normal(rng);
    const int count = pois(rng);
    for (int k = 0; k < count; ++k) {
      const Eigen::VectorXd e = model.jumps.sample(rng);
      z[2] += e[0];
      z[3] += psi(model.damping, e) * normal(rng);
    }
    z[2] -= comp[0];
    acc += std::exp(std::complex<double>(0.0, u.dot(z)));
  }
  acc /= double(N);
  CHECK(std::abs(acc - target) < 4.0 / std::sqrt(double(N)));
}

TEST_CASE("coefficient fields: constant and proportional variants") {
  const MarketModel model = canonical_model();
  const Eigen::VectorXd y = vec1(0.7);
  CHECK(model.coeffs.b(y)[0] == doctest::Approx(0.3));
  CHECK(model.coeffs.A(y)(0, 0) == doctest::Approx(0.04).epsilon(1e-14));
  CHECK(model.coeffs.is_constant());

  const CoefficientField prop = CoefficientField::proportional(
      1.0, 0.5, vec1(0.3), Eigen::MatrixXd::Constant(1, 1, 0.2),
      Eigen::MatrixXd::Constant(1, 1, 1.0));
  CHECK_FALSE(prop.is_constant());
  CHECK(prop.u_scalar(Eigen::VectorXd::Zero(1)) == doctest::Approx(1.5));
  const double u_at = 1.0 + 0.5 / (1.0 + 0.49);
  CHECK(prop.b(y)[0] == doctest::Approx(u_at * 0.3).epsilon(1e-14));
  // The scalar field cancels in b^T Sigma^{-1} b: the ratio is constant in y.
  MarketModel pm = model;
  pm.coeffs = prop;
  for (double yy : {0.0, 0.4, 2.0}) {
    const Eigen::VectorXd yv = vec1(yy);
    const Eigen::MatrixXd S = sigma_matrix(pm, yv);
    const Eigen::VectorXd bb = prop.b(yv);
    const double k = bb.dot(S.llt().solve(bb));
    CHECK(k == doctest::Approx(1.8).epsilon(1e-12));
  }

  CHECK_THROWS_AS(CoefficientField::proportional(
                      -1.0, 0.5, vec1(0.3), Eigen::MatrixXd::Constant(1, 1, 0.2),
                      Eigen::MatrixXd::Constant(1, 1, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(CoefficientField::proportional(
                      1.0, 0.5, vec1(0.0), Eigen::MatrixXd::Constant(1, 1, 0.2),
                      Eigen::MatrixXd::Constant(1, 1, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("jump spec validation rejects malformed data") {
  CHECK_THROWS_AS(JumpSpec::atoms(1.0, {vec1(0.1), vec1(-0.1)}, {0.6, 0.6}),
                  std::invalid_argument);
  CHECK_THROWS_AS(JumpSpec::atoms(1.0, {vec1(0.1)}, {0.5, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(JumpSpec::atoms(-1.0, {vec1(0.1)}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(JumpSpec::uniform_box(1.0, vec1(0.5), vec1(-0.5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(JumpSpec::gaussian(1.0, vec1(0.0), -0.1),
                  std::invalid_argument);
}

TEST_CASE("model validation probes the covariance on a deterministic point set") {
  const MarketModel model = canonical_model();
  CHECK_NOTHROW(validate_model(model, Eigen::VectorXd::Zero(1)));

  const auto pts_a = halton_box_points(16, 2, Eigen::VectorXd::Zero(2), 1.0);
  const auto pts_b = halton_box_points(16, 2, Eigen::VectorXd::Zero(2), 1.0);
  REQUIRE(pts_a.size() == 16);
  for (size_t i = 0; i < pts_a.size(); ++i) {
    CHECK((pts_a[i] - pts_b[i]).norm() == 0.0);  // deterministic
    CHECK(pts_a[i].cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }

  MarketModel bad = model;
  bad.coeffs = CoefficientField::constant(vec1(0.3),
                                          Eigen::MatrixXd::Zero(1, 1),
                                          Eigen::MatrixXd::Constant(1, 1, 1.0));
  bad.jumps = JumpSpec::none(1);
  CHECK_THROWS_AS(validate_model(bad, Eigen::VectorXd::Zero(1)),
                  std::runtime_error);
}

TEST_CASE("psd helpers: square root and taper") {
  Eigen::MatrixXd m(2, 2);
  m << 4.0, 0.0, 0.0, 9.0;
  const Eigen::MatrixXd r = psd_sqrt(m);
  CHECK((r * r - m).norm() < 1e-12);
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(3.0));
  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(psd_sqrt(indef), std::invalid_argument);

  CHECK(smoothstep_taper(0.2, 0.5, 1.0) == doctest::Approx(1.0));
  CHECK(smoothstep_taper(2.0, 0.5, 1.0) == doctest::Approx(0.0));
  CHECK(smoothstep_taper(0.75, 0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  const double lo = smoothstep_taper(0.6, 0.5, 1.0);
  const double hi = smoothstep_taper(0.9, 0.5, 1.0);
  CHECK(lo > hi);  // monotone decreasing in between
}

TEST_CASE("quadrature rules integrate exactly on their design classes") {
  const QuadratureRule gh = gauss_hermite(8);
  double w = 0.0, m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < 8; ++i) {
    w += gh.weights[i];
    m2 += gh.weights[i] * gh.nodes[i] * gh.nodes[i];
    m4 += gh.weights[i] * std::pow(gh.nodes[i], 4);
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-11));

  const QuadratureRule gl = gauss_legendre(6, -1.0, 3.0);
  double wl = 0.0, il = 0.0;
  for (int i = 0; i < 6; ++i) {
    wl += gl.weights[i];
    il += gl.weights[i] * gl.nodes[i] * gl.nodes[i];
  }
  CHECK(wl == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(il == doctest::Approx((27.0 + 1.0) / 3.0).epsilon(1e-12));

  // Tensor expectation: E[x^2 y^2] = 1 for independent standard normals.
  const double t = gauss_expectation(2, 6, [](const Eigen::VectorXd& x) {
    return x[0] * x[0] * x[1] * x[1];
  });
  CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
}
