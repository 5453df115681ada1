#include "jumpex/exploratory_sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "jumpex/linalg.hpp"
#include "jumpex/rng.hpp"

namespace jumpex {

namespace {

constexpr double kTwoPiE = 17.079468445347132;  // 2 * pi * e

std::string state_to_string(double t, const Eigen::VectorXd& y) {
  std::ostringstream os;
  os << "t = " << t << ", y = (";
  for (int i = 0; i < y.size(); ++i) {
    if (i) os << ", ";
    os << y[i];
  }
  os << ")";
  return os.str();
}

// 0.5 * log det of an SPD matrix via Cholesky; false if not PD.
bool half_log_det(const Eigen::MatrixXd& theta, double* out) {
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success) return false;
  double acc = 0.0;
  for (int i = 0; i < theta.rows(); ++i) {
    const double l = llt.matrixL()(i, i);
    if (!(l > 0.0)) return false;
    acc += std::log(l);
  }
  *out = acc;
  return true;
}

double gaussian_entropy_from_half_log_det(int D, double half_ld) {
  return 0.5 * D * std::log(kTwoPiE) + half_ld;
}

}  // namespace

GaussianFeedbackLaw GaussianFeedbackLaw::constant(const Eigen::VectorXd& m,
                                                  const Eigen::MatrixXd& v,
                                                  std::string label) {
  // v is the covariance matrix of the law (not a linear factor).
  GaussianFeedbackLaw law;
  law.mean = [m](double, double, const Eigen::VectorXd&) { return m; };
  law.cov = [v](double, const Eigen::VectorXd&) { return v; };
  law.label = std::move(label);
  law.cov_time_only = true;
  law.mean_affine_in_x = true;
  law.mean0 = [m](double, const Eigen::VectorXd&) { return m; };
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m.size());
  law.mean_x = [zero](double, const Eigen::VectorXd&) { return zero; };
  return law;
}

GaussianFeedbackLaw scale_law(const GaussianFeedbackLaw& base, double mean_factor,
                              double cov_factor, std::string label) {
  if (!(cov_factor > 0.0))
    throw std::invalid_argument("scale_law: covariance factor must be positive");
  GaussianFeedbackLaw law;
  const auto base_mean = base.mean;
  const auto base_cov = base.cov;
  law.mean = [base_mean, mean_factor](double t, double x, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(mean_factor * base_mean(t, x, y));
  };
  law.cov = [base_cov, cov_factor](double t, const Eigen::VectorXd& y) {
    return Eigen::MatrixXd(cov_factor * base_cov(t, y));
  };
  law.label = std::move(label);
  law.cov_time_only = base.cov_time_only;
  law.mean_affine_in_x = base.mean_affine_in_x;
  if (base.mean0) {
    const auto base_mean0 = base.mean0;
    law.mean0 = [base_mean0, mean_factor](double t, const Eigen::VectorXd& y) {
      return Eigen::VectorXd(mean_factor * base_mean0(t, y));
    };
  }
  if (base.mean_x) {
    const auto base_mean_x = base.mean_x;
    law.mean_x = [base_mean_x, mean_factor](double t, const Eigen::VectorXd& y) {
      return Eigen::VectorXd(mean_factor * base_mean_x(t, y));
    };
  }
  return law;
}

double entropy_rate(const GaussianFeedbackLaw& law, double t, double x,
                    const Eigen::VectorXd& y) {
  (void)x;  // the Gaussian entropy does not depend on the mean
  const Eigen::MatrixXd theta = law.cov(t, y);
  double half_ld = 0.0;
  if (!half_log_det(theta, &half_ld)) {
    static bool warned = false;
    if (!warned) {
      std::fprintf(stderr,
                   "warning: entropy_rate: singular covariance encountered; "
                   "returning -inf\n");
      warned = true;
    }
    return -std::numeric_limits<double>::infinity();
  }
  return gaussian_entropy_from_half_log_det(static_cast<int>(theta.rows()), half_ld);
}

CostEstimate simulate_exploratory(const MarketModel& model,
                                  const GaussianFeedbackLaw& law, double x0,
                                  const Eigen::VectorXd& y0, const SimConfig& cfg,
                                  double what, double lambda,
                                  std::vector<double>* terminal_out) {
  const int D = model.dim();
  const int n = cfg.steps;
  if (n < 1) throw std::invalid_argument("simulate_exploratory: need steps >= 1");
  if (cfg.paths == 0)
    throw std::invalid_argument("simulate_exploratory: need at least one path");
  if (y0.size() != D)
    throw std::invalid_argument("simulate_exploratory: y0 dimension mismatch");
  if (!law.mean || !law.cov)
    throw std::invalid_argument("simulate_exploratory: law is missing callbacks");

  const double T = model.T;
  const double dt = T / n;
  const Eigen::VectorXd comp = model.jumps.nu_m1();  // intensity * m1

  // Fast path: covariance ignores y and the mean is affine in x, with
  // constant market coefficients.  Per-step quantities that do not depend
  // on the path are cached up front.
  const bool fast = law.cov_time_only && law.mean_affine_in_x &&
                    model.coeffs.is_constant() && law.mean0 && law.mean_x;

  std::vector<Eigen::MatrixXd> theta_sqrt_cache;  // at left grid points
  std::vector<double> entropy_mid_cache;          // at step midpoints
  double deterministic_entropy_integral = 0.0;
  if (fast) {
    theta_sqrt_cache.reserve(static_cast<size_t>(n));
    entropy_mid_cache.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double t_left = k * dt;
      theta_sqrt_cache.push_back(psd_sqrt(law.cov(t_left, y0)));
      if (lambda > 0.0) {
        const double t_mid = t_left + 0.5 * dt;
        const Eigen::MatrixXd theta_mid = law.cov(t_mid, y0);
        double half_ld = 0.0;
        if (!half_log_det(theta_mid, &half_ld))
          throw std::runtime_error(
              "simulate_exploratory: control covariance not positive definite "
              "at " + state_to_string(t_mid, y0));
        entropy_mid_cache.push_back(
            gaussian_entropy_from_half_log_det(D, half_ld));
      } else {
        entropy_mid_cache.push_back(0.0);
      }
      deterministic_entropy_integral += dt * entropy_mid_cache.back();
    }
  }

  double sum_v = 0.0, sum_v2 = 0.0;
  double sum_xt = 0.0, sum_xt2 = 0.0;
  double sum_sq = 0.0, sum_ent = 0.0;
  if (terminal_out) {
    terminal_out->clear();
    terminal_out->reserve(cfg.paths);
  }

  Eigen::VectorXd mu(D), dw(D), mark(D), ge(D), b_loc(D);
  Eigen::MatrixXd a_loc(D, D), g_loc(D, D), theta_sqrt(D, D);
  Eigen::VectorXd sheet(D * D), s_flat(D * D);
  std::vector<double> epochs;

  for (std::size_t p = 0; p < cfg.paths; ++p) {
    std::mt19937_64 rng = make_stream(cfg.seed, p, purpose::exploratory);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif_time(0.0, T);

    // Exact compound-Poisson epochs: count first, then sorted uniforms.
    epochs.clear();
    if (model.jumps.active()) {
      std::poisson_distribution<int> pois(model.jumps.intensity * T);
      const int count = pois(rng);
      epochs.reserve(static_cast<size_t>(count));
      for (int j = 0; j < count; ++j) epochs.push_back(unif_time(rng));
      std::sort(epochs.begin(), epochs.end());
    }
    size_t next_epoch = 0;

    double x = x0;
    Eigen::VectorXd y = y0;
    double entropy_integral = fast ? deterministic_entropy_integral : 0.0;

    for (int k = 0; k < n; ++k) {
      const double t_left = k * dt;
      const double t_right = (k + 1) * dt;

      // Coefficients frozen at the left grid point for the whole step.
      if (fast) {
        b_loc = model.coeffs.b_const;
        a_loc = model.coeffs.a_const;
        g_loc = model.coeffs.gamma_const;
        theta_sqrt = theta_sqrt_cache[static_cast<size_t>(k)];
      } else {
        b_loc = model.coeffs.b(y);
        a_loc = model.coeffs.a(y);
        g_loc = model.coeffs.gamma(y);
        theta_sqrt = psd_sqrt(law.cov(t_left, y));
        if (lambda > 0.0) {
          const Eigen::MatrixXd theta_mid = law.cov(t_left + 0.5 * dt, y);
          double half_ld = 0.0;
          if (!half_log_det(theta_mid, &half_ld))
            throw std::runtime_error(
                "simulate_exploratory: control covariance not positive "
                "definite at " + state_to_string(t_left + 0.5 * dt, y));
          entropy_integral +=
              dt * gaussian_entropy_from_half_log_det(D, half_ld);
        }
      }
      // Flattened Theta^{1/2} a for the exploration-sheet trace term.
      {
        const Eigen::MatrixXd s_mat = theta_sqrt * a_loc;
        for (int i = 0; i < D; ++i)
          for (int j = 0; j < D; ++j) s_flat[i * D + j] = s_mat(i, j);
      }

      double seg_left = t_left;
      while (true) {
        const bool has_epoch = next_epoch < epochs.size() &&
                               epochs[next_epoch] < t_right - 1e-15;
        const double seg_right = has_epoch ? epochs[next_epoch] : t_right;
        const double delta = seg_right - seg_left;
        if (delta > 0.0) {
          const double sq_delta = std::sqrt(delta);
          for (int d = 0; d < D; ++d) dw[d] = sq_delta * normal(rng);
          for (int d = 0; d < D * D; ++d) sheet[d] = sq_delta * normal(rng);
          if (fast)
            mu = law.mean0(t_left, y) + x * law.mean_x(t_left, y);
          else
            mu = law.mean(t_left, x, y);
          // Wealth: mean drift with jump compensator, Brownian part, and
          // the exploration-sheet trace term.
          const double drift = mu.dot(b_loc) - mu.dot(g_loc * comp);
          x += drift * delta + mu.dot(a_loc * dw) + s_flat.dot(sheet);
          // State: same Brownian increment, its own compensator.
          y += (b_loc - g_loc * comp) * delta + a_loc * dw;
        }
        if (!has_epoch) break;
        // Jump: size e from the law, fresh exploration mark u ~ N(0, I).
        const Eigen::VectorXd e = model.jumps.sample(rng);
        for (int d = 0; d < D; ++d) mark[d] = normal(rng);
        if (fast)
          mu = law.mean0(t_left, y) + x * law.mean_x(t_left, y);
        else
          mu = law.mean(t_left, x, y);
        ge.noalias() = g_loc * e;
        x += (mu + theta_sqrt * mark).dot(ge);
        y += ge;
        seg_left = seg_right;
        ++next_epoch;
      }
    }

    const double dev_sq = (x - what) * (x - what);
    const double value = dev_sq - lambda * entropy_integral;
    sum_v += value;
    sum_v2 += value * value;
    sum_xt += x;
    sum_xt2 += x * x;
    sum_sq += dev_sq;
    sum_ent += entropy_integral;
    if (terminal_out) terminal_out->push_back(x);
  }

  const double nn = static_cast<double>(cfg.paths);
  CostEstimate est;
  est.value = sum_v / nn;
  est.se = std::sqrt(std::max(0.0, sum_v2 / nn - est.value * est.value) / nn);
  est.terminal_mean = sum_xt / nn;
  est.terminal_mean_se = std::sqrt(
      std::max(0.0, sum_xt2 / nn - est.terminal_mean * est.terminal_mean) / nn);
  est.terminal_second_moment = sum_sq / nn;
  est.entropy_integral_mean = sum_ent / nn;
  return est;
}

AdmissibilityDiagnostics admissibility_probe(
    const MarketModel& model, const GaussianFeedbackLaw& law,
    const std::vector<std::tuple<double, double, Eigen::VectorXd>>& states) {
  if (states.empty())
    throw std::invalid_argument("admissibility_probe: need at least one state");
  AdmissibilityDiagnostics diag;
  double sum = 0.0;
  for (const auto& [t, x, y] : states) {
    const Eigen::MatrixXd sigma = sigma_matrix(model, y);
    const Eigen::VectorXd mu = law.mean(t, x, y);
    const Eigen::MatrixXd theta = law.cov(t, y);
    const double integrand = mu.dot(sigma * mu) + (sigma * theta).trace();
    if (!std::isfinite(integrand)) diag.finite = false;
    diag.max_integrand = std::max(diag.max_integrand, integrand);
    sum += integrand;
  }
  diag.mean_integrand = sum / static_cast<double>(states.size());
  return diag;
}

}  // namespace jumpex
