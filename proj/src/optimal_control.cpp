#include "jumpex/optimal_control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "jumpex/linalg.hpp"
#include "jumpex/quadrature.hpp"
#include "jumpex/rng.hpp"

namespace jumpex {

namespace {

constexpr double kTwoPiE = 17.079468445347132;  // 2 * pi * e

// Both solvable families reduce to one set of effective constants: the
// plain constants for the constant family, and the tilde matrices for the
// scaled family (every appearance of the y-scale cancels in b^T Sigma^{-1} b,
// Sigma^{-1/2} a, Sigma^{-1} gamma and b^T Sigma^{-1} gamma).
struct EffectiveConstants {
  Eigen::VectorXd b;
  Eigen::MatrixXd a, gamma, sigma;
};

EffectiveConstants effective_constants(const MarketModel& model) {
  EffectiveConstants ec;
  if (model.coeffs.is_constant()) {
    ec.b = model.coeffs.b_const;
    ec.a = model.coeffs.a_const;
    ec.gamma = model.coeffs.gamma_const;
  } else {
    ec.b = model.coeffs.b_tilde;
    ec.a = model.coeffs.a_tilde;
    ec.gamma = model.coeffs.gamma_tilde;
  }
  ec.sigma = ec.a * ec.a.transpose() +
             ec.gamma * model.jumps.nu_m2() * ec.gamma.transpose();
  return ec;
}

double log_det_spd(const Eigen::MatrixXd& m, const char* who) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(who) +
                                ": matrix is not positive definite");
  double acc = 0.0;
  for (int i = 0; i < m.rows(); ++i) acc += std::log(llt.matrixL()(i, i));
  return 2.0 * acc;
}

// One noise path of the closed-form wealth machinery.  Returns the
// stochastic exponential at T, the accumulated integral term
// I = int dM / E_  +  int d[M, Z] / E_, the Euler solution of
// dX = -(X - what) dZ + sqrt(lambda/2) dM on the identical increments, and
// the explicit wealth at the requested grid indices.
struct PathOutput {
  double exp_T = 1.0;
  double integral = 0.0;
  double x_euler_T = 0.0;
  Eigen::VectorXd x_at;
};

struct ExplicitMachine {
  const MarketModel* model = nullptr;
  const AlphaBeta* ab = nullptr;
  int D = 0;
  int steps = 0;
  double dt = 0.0;
  double lambda = 0.0;
  double what = 0.0;
  double x0 = 0.0;
  // Effective constants of the exposure/auxiliary processes.
  double K = 0.0;            // q . b
  Eigen::VectorXd aq;        // a^T q, Brownian loading of Z
  double zz_rate = 0.0;      // q^T A q, continuous quadratic variation rate
  double comp_z = 0.0;       // q . (gamma * intensity * m1), jump compensator
  Eigen::VectorXd q_gamma;   // gamma^T q, jump sizes of Z are q_gamma . e
  Eigen::MatrixXd mark_map;  // Sigma^{-1/2} gamma, jump loading of M
  double m_cont_scale = 0.0; // ||Sigma^{-1/2} a||_F, sheet loading of M
  std::vector<int> report_idx;

  ExplicitMachine(const MarketModel& model_in, const AlphaBeta& ab_in,
                  double x0_in, const SimConfig& cfg, double lambda_in,
                  double what_in, const std::vector<double>& report_times) {
    model = &model_in;
    ab = &ab_in;
    D = model_in.dim();
    steps = cfg.steps;
    if (steps < 1)
      throw std::invalid_argument("explicit wealth: need steps >= 1");
    dt = model_in.T / steps;
    lambda = lambda_in;
    what = what_in;
    x0 = x0_in;

    validate_exposure_jumps(model_in);
    const EffectiveConstants ec = effective_constants(model_in);
    Eigen::LLT<Eigen::MatrixXd> llt(ec.sigma);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("explicit wealth: Sigma is not positive definite");
    const Eigen::VectorXd q = llt.solve(ec.b);
    K = ec.b.dot(q);
    aq = ec.a.transpose() * q;
    zz_rate = aq.squaredNorm();
    comp_z = q.dot(ec.gamma * model_in.jumps.nu_m1());
    q_gamma = ec.gamma.transpose() * q;
    const Eigen::MatrixXd sigma_inv =
        llt.solve(Eigen::MatrixXd::Identity(D, D));
    const Eigen::MatrixXd sigma_inv_sqrt = psd_sqrt(sigma_inv);
    mark_map = sigma_inv_sqrt * ec.gamma;
    m_cont_scale = (sigma_inv_sqrt * ec.a).norm();  // Frobenius norm

    report_idx.reserve(report_times.size());
    for (double t : report_times) {
      const int idx = static_cast<int>(std::lround(t / model_in.T * steps));
      if (idx < 0 || idx > steps || std::abs(idx * dt - t) > 1e-9)
        throw std::invalid_argument(
            "explicit wealth: report time does not land on the grid");
      report_idx.push_back(idx);
    }
  }

  double x_explicit(double exp_val, double integral) const {
    return what + (x0 - what + std::sqrt(lambda / 2.0) * integral) * exp_val;
  }

  PathOutput walk(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif_time(0.0, model->T);
    std::vector<double> epochs;
    if (model->jumps.active()) {
      std::poisson_distribution<int> pois(model->jumps.intensity * model->T);
      const int count = pois(rng);
      epochs.reserve(static_cast<size_t>(count));
      for (int j = 0; j < count; ++j) epochs.push_back(unif_time(rng));
      std::sort(epochs.begin(), epochs.end());
    }
    size_t next_epoch = 0;

    PathOutput out;
    out.x_at.resize(static_cast<Eigen::Index>(report_idx.size()));
    double exp_val = 1.0;
    double integral = 0.0;
    double x_euler = x0;
    const double sql = std::sqrt(lambda / 2.0);

    auto record = [&](int grid_index) {
      for (size_t r = 0; r < report_idx.size(); ++r)
        if (report_idx[r] == grid_index)
          out.x_at[static_cast<Eigen::Index>(r)] = x_explicit(exp_val, integral);
    };
    record(0);

    Eigen::VectorXd dw(D), mark(D);
    for (int k = 0; k < steps; ++k) {
      const double t_right = (k + 1) * dt;
      double seg_left = k * dt;
      while (true) {
        const bool has_epoch = next_epoch < epochs.size() &&
                               epochs[next_epoch] < t_right - 1e-15;
        const double seg_right = has_epoch ? epochs[next_epoch] : t_right;
        const double delta = seg_right - seg_left;
        if (delta > 0.0) {
          // sqrt(alpha^{-1}) at the segment start scales the auxiliary
          // martingale increment; evaluated here (not at the step start) the
          // second-moment identity E[(I E)^2] = D T holds exactly at any
          // step count.
          const double alpha_scale =
              std::exp(0.5 * (ab->T - seg_left) * ab->K);
          const double sq_delta = std::sqrt(delta);
          for (int d = 0; d < D; ++d) dw[d] = sq_delta * normal(rng);
          const double zeta = normal(rng);
          const double dz = (K - comp_z) * delta + aq.dot(dw);
          const double dm = alpha_scale * m_cont_scale * sq_delta * zeta;
          integral += dm / exp_val;
          x_euler += -(x_euler - what) * dz + sql * dm;
          exp_val *= std::exp(-dz - 0.5 * zz_rate * delta);
        }
        if (!has_epoch) break;
        const Eigen::VectorXd e = model->jumps.sample(rng);
        for (int d = 0; d < D; ++d) mark[d] = normal(rng);
        const double dz = q_gamma.dot(e);
        if (std::abs(1.0 - dz) < 1e-12)
          throw std::runtime_error(
              "explicit wealth: exposure jump of size one encountered");
        const double dm =
            std::exp(0.5 * (ab->T - seg_right) * ab->K) * mark.dot(mark_map * e);
        // Variation of constants at a jump: dI = dM / E with the post-jump
        // exponential, i.e. dM/E_ + dM dZ / (E_ (1 - dZ)).
        x_euler += -(x_euler - what) * dz + sql * dm;
        exp_val *= (1.0 - dz);
        integral += dm / exp_val;
        seg_left = seg_right;
        ++next_epoch;
      }
      record(k + 1);
    }
    out.exp_T = exp_val;
    out.integral = integral;
    out.x_euler_T = x_euler;
    return out;
  }
};

}  // namespace

double AlphaBeta::alpha(double t) const { return std::exp(-(T - t) * K); }

std::pair<double, double> AlphaBeta::beta(double t, const Eigen::VectorXd& y) const {
  if (family == Family::Constant) {
    const double tau = T - t;
    const double log_ratio = D * std::log(lambda * std::numbers::pi) - log_det_sigma;
    const double value = -tau * tau * (lambda * D / 4.0) * K -
                         tau * (lambda / 2.0) * log_ratio;
    return {value, 0.0};
  }
  if (!beta_mc) throw std::logic_error("AlphaBeta::beta: missing estimator");
  return beta_mc(t, y);
}

AlphaBeta solve_alpha_beta(const MarketModel& model, double lambda, double what,
                           const BetaMcConfig& mc) {
  AlphaBeta ab;
  ab.family = model.coeffs.is_constant() ? AlphaBeta::Family::Constant
                                         : AlphaBeta::Family::Proportional;
  ab.D = model.dim();
  ab.T = model.T;
  ab.lambda = lambda;
  ab.what = what;
  if (lambda < 0.0)
    throw std::invalid_argument("solve_alpha_beta: lambda must be >= 0");

  const EffectiveConstants ec = effective_constants(model);
  if (ec.b.norm() == 0.0)
    throw std::invalid_argument("solve_alpha_beta: drift vector must be nonzero");
  Eigen::LLT<Eigen::MatrixXd> llt(ec.sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("solve_alpha_beta: Sigma is not positive definite");
  ab.K = ec.b.dot(llt.solve(ec.b));
  ab.log_det_sigma = log_det_spd(ec.sigma, "solve_alpha_beta");

  if (ab.family == AlphaBeta::Family::Proportional) {
    // Feynman-Kac estimator: beta(t, y) = E int_t^T f(s, Y_s) ds with
    // f(s, y) = -(lambda/2) [ D log(lambda pi) + D (T - s) K - log det Sigma(y) ],
    // the state advanced by Euler steps with exact-in-law per-step jump sums.
    const double K = ab.K;
    const double T = ab.T;
    const int D = ab.D;
    ab.beta_mc = [model, K, T, D, lambda, mc](
                     double t, const Eigen::VectorXd& y) -> std::pair<double, double> {
      if (lambda == 0.0) return {0.0, 0.0};
      if (t >= T - 1e-15) return {0.0, 0.0};
      const int steps = mc.time_steps;
      const double delta = (T - t) / steps;
      const double sq_delta = std::sqrt(delta);
      const Eigen::VectorXd comp = model.jumps.nu_m1();
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t p = 0; p < mc.paths; ++p) {
        std::mt19937_64 rng = make_stream(mc.seed, p, purpose::feynman_kac);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::poisson_distribution<int> pois(model.jumps.intensity * delta);
        Eigen::VectorXd yy = y;
        double acc = 0.0;
        for (int k = 0; k < steps; ++k) {
          const double s_mid = t + (k + 0.5) * delta;
          const double log_det =
              log_det_spd(sigma_matrix(model, yy), "beta estimator");
          const double f = -(lambda / 2.0) *
                           (D * std::log(lambda * std::numbers::pi) +
                            D * (T - s_mid) * K - log_det);
          acc += delta * f;
          Eigen::VectorXd dw(D);
          for (int d = 0; d < D; ++d) dw[d] = sq_delta * normal(rng);
          Eigen::VectorXd jump_sum = Eigen::VectorXd::Zero(D);
          if (model.jumps.active()) {
            const int count = pois(rng);
            for (int j = 0; j < count; ++j) jump_sum += model.jumps.sample(rng);
          }
          yy += (model.coeffs.b(yy) - model.coeffs.gamma(yy) * comp) * delta +
                model.coeffs.a(yy) * dw +
                model.coeffs.gamma(yy) * jump_sum;
        }
        sum += acc;
        sum_sq += acc * acc;
      }
      const double nn = static_cast<double>(mc.paths);
      const double mean = sum / nn;
      const double se =
          std::sqrt(std::max(0.0, sum_sq / nn - mean * mean) / nn);
      return {mean, se};
    };
  }
  return ab;
}

Eigen::VectorXd script_M(const AlphaBeta& ab, const MarketModel& model, double t,
                         const Eigen::VectorXd& y) {
  // alpha depends on t only; its y-gradient term and the jump correction are
  // still assembled literally so a y-dependent alpha extension would slot in.
  const auto alpha_at = [&](double tt, const Eigen::VectorXd&) {
    return ab.alpha(tt);
  };
  Eigen::VectorXd m = alpha_at(t, y) * model.coeffs.b(y);
  // + A(y) grad_y alpha = 0 for the supported families.
  if (model.jumps.active()) {
    const Eigen::MatrixXd g = model.coeffs.gamma(y);
    const int D = model.dim();
    Eigen::VectorXd corr(D);
    for (int d = 0; d < D; ++d) {
      corr[d] = model.jumps.intensity *
                model.jumps.law_expectation([&](const Eigen::VectorXd& e) {
                  return (alpha_at(t, y + g * e) - alpha_at(t, y)) * e[d];
                });
    }
    m += g * corr;
  }
  return m;
}

Eigen::MatrixXd script_S(const AlphaBeta& ab, const MarketModel& model, double t,
                         const Eigen::VectorXd& y) {
  const auto alpha_at = [&](double tt, const Eigen::VectorXd&) {
    return ab.alpha(tt);
  };
  Eigen::MatrixXd s = alpha_at(t, y) * model.coeffs.A(y);
  if (model.jumps.active()) {
    const Eigen::MatrixXd g = model.coeffs.gamma(y);
    const int D = model.dim();
    Eigen::MatrixXd weighted(D, D);
    for (int k = 0; k < D; ++k) {
      for (int l = k; l < D; ++l) {
        weighted(k, l) = model.jumps.intensity *
                         model.jumps.law_expectation([&](const Eigen::VectorXd& e) {
                           return alpha_at(t, y + g * e) * e[k] * e[l];
                         });
        weighted(l, k) = weighted(k, l);
      }
    }
    s += g * weighted * g.transpose();
  }
  return s;
}

double value_function(const AlphaBeta& ab, double t, double x,
                      const Eigen::VectorXd& y) {
  const double dev = x - ab.what;
  return ab.alpha(t) * dev * dev + ab.beta(t, y).first;
}

double wang_zhou_value(double t, double x, double rho, double sigma,
                       double lambda, double what, double T) {
  const double tau = T - t;
  const double dev = x - what;
  return std::exp(-rho * rho * tau) * dev * dev -
         (lambda / 2.0) * (rho * rho * tau * tau / 2.0 +
                           tau * std::log(lambda * std::numbers::pi /
                                          (sigma * sigma)));
}

GaussianFeedbackLaw optimal_law(const AlphaBeta& ab, const MarketModel& model,
                                bool strict_lambda_zero, double epsilon) {
  double lambda_eff = ab.lambda;
  std::string label = "optimal";
  if (ab.lambda == 0.0) {
    if (strict_lambda_zero)
      throw std::invalid_argument(
          "optimal_law: lambda = 0 has no Gaussian optimizer (entropy "
          "degenerates); use classical_mv_law or the regularized variant");
    static bool warned = false;
    if (!warned) {
      std::fprintf(stderr,
                   "warning: optimal_law: lambda = 0, regularizing the "
                   "exploration covariance with epsilon = %g\n", epsilon);
      warned = true;
    }
    lambda_eff = epsilon;
    label = "optimal-regularized";
  }

  GaussianFeedbackLaw law;
  const double what = ab.what;
  auto pull = [ab, model](double t, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd s = script_S(ab, model, t, y);
    const Eigen::VectorXd m = script_M(ab, model, t, y);
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("optimal_law: effective covariance not PD");
    return Eigen::VectorXd(llt.solve(m));
  };
  law.mean = [pull, what](double t, double x, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(-(x - what) * pull(t, y));
  };
  law.cov = [ab, model, lambda_eff](double t, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd s = script_S(ab, model, t, y);
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("optimal_law: effective covariance not PD");
    const int D = static_cast<int>(s.rows());
    return Eigen::MatrixXd((lambda_eff / 2.0) *
                           llt.solve(Eigen::MatrixXd::Identity(D, D)));
  };
  law.label = std::move(label);
  law.cov_time_only = model.coeffs.is_constant();
  law.mean_affine_in_x = true;
  law.mean0 = [pull, what](double t, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(what * pull(t, y));
  };
  law.mean_x = [pull](double t, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(-pull(t, y));
  };
  return law;
}

GaussianFeedbackLaw classical_mv_law(const AlphaBeta& ab, const MarketModel& model) {
  GaussianFeedbackLaw law = optimal_law(ab, model, false, 1e-8);
  const int D = model.dim();
  law.cov = [D](double, const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Zero(D, D));
  };
  law.cov_time_only = true;
  law.label = "classical";
  return law;
}

double hjb_residual(const AlphaBeta& ab, const MarketModel& model,
                    const std::vector<std::tuple<double, double, Eigen::VectorXd>>&
                        probes) {
  if (!model.coeffs.is_constant())
    throw std::invalid_argument(
        "hjb_residual: only constant coefficients are supported");
  if (!(ab.lambda > 0.0))
    throw std::invalid_argument("hjb_residual: needs lambda > 0");
  if (probes.empty())
    throw std::invalid_argument("hjb_residual: need at least one probe");

  const int D = ab.D;
  const double lambda = ab.lambda;
  const double log_ratio = D * std::log(lambda * std::numbers::pi) - ab.log_det_sigma;

  double worst = 0.0;
  for (const auto& [t, x, y] : probes) {
    const double alpha = ab.alpha(t);
    const double dev = x - ab.what;
    // Time derivatives of the candidate value coefficients.
    const double d_alpha = ab.K * alpha;
    const double d_beta = (lambda * D / 2.0) * ab.K * (ab.T - t) +
                          (lambda / 2.0) * log_ratio;

    // Optimizer computed from the candidate coefficients.
    const Eigen::MatrixXd s = script_S(ab, model, t, y);
    const Eigen::VectorXd m = script_M(ab, model, t, y);
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("hjb_residual: effective covariance not PD");
    const Eigen::VectorXd mu = -dev * llt.solve(m);
    const Eigen::MatrixXd theta =
        (lambda / 2.0) * llt.solve(Eigen::MatrixXd::Identity(D, D));
    const Eigen::MatrixXd theta_sqrt = psd_sqrt(theta);

    const Eigen::VectorXd b = model.coeffs.b(y);
    const Eigen::MatrixXd big_a = model.coeffs.A(y);
    const Eigen::MatrixXd g = model.coeffs.gamma(y);

    // Generator applied to v = alpha (x - what)^2 + beta with the law
    // N(mu, theta) plugged in; the jump expectation runs over the size law
    // and a Gauss-Hermite rule for the exploration mark.
    const double cont = 2.0 * alpha * dev * mu.dot(b) +
                        alpha * (mu.dot(big_a * mu) + (big_a * theta).trace());
    double jump = 0.0;
    if (model.jumps.active()) {
      jump = alpha * model.jumps.intensity *
             model.jumps.law_expectation([&](const Eigen::VectorXd& e) {
               const Eigen::VectorXd ge = g * e;
               return gauss_expectation(D, 8, [&](const Eigen::VectorXd& u) {
                 const double kick = (mu + theta_sqrt * u).dot(ge);
                 return kick * kick;
               });
             });
    }
    const double entropy_cost =
        -lambda * (0.5 * D * std::log(kTwoPiE) +
                   0.5 * log_det_spd(theta, "hjb_residual"));
    const double residual = d_alpha * dev * dev + d_beta + cont + jump +
                            entropy_cost;
    worst = std::max(worst, std::abs(residual));
  }
  return worst;
}

std::vector<std::tuple<double, double, Eigen::VectorXd>> default_hjb_probes(
    const MarketModel& model, double x_center) {
  const int D = model.dim();
  std::vector<std::tuple<double, double, Eigen::VectorXd>> probes;
  const double t_fracs[] = {0.0, 0.45, 0.9};
  const double x_offsets[] = {-0.5, 0.0, 0.5};
  const double y_offsets[] = {-0.5, 0.0, 0.5};
  for (double tf : t_fracs)
    for (double xo : x_offsets)
      for (double yo : y_offsets)
        probes.emplace_back(tf * model.T, x_center + xo,
                            Eigen::VectorXd::Constant(D, yo));
  return probes;
}

ExplicitEnsembleResult simulate_optimal_wealth_explicit(
    const MarketModel& model, const AlphaBeta& ab, double x0,
    const Eigen::VectorXd& y0, const SimConfig& cfg, double lambda, double what,
    const std::vector<double>& report_times) {
  if (y0.size() != model.dim())
    throw std::invalid_argument("explicit wealth: y0 dimension mismatch");
  if (cfg.paths == 0)
    throw std::invalid_argument("explicit wealth: need at least one path");
  const ExplicitMachine machine(model, ab, x0, cfg, lambda, what, report_times);

  const size_t nr = report_times.size();
  double sum_x = 0.0, sum_x2 = 0.0, sum_dev2 = 0.0, sum_gap2 = 0.0, sum_exp = 0.0;
  Eigen::VectorXd sum_at = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nr));
  Eigen::VectorXd sum_at2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nr));

  for (std::size_t p = 0; p < cfg.paths; ++p) {
    std::mt19937_64 rng = make_stream(cfg.seed, p, purpose::explicit_wealth);
    const PathOutput out = machine.walk(rng);
    const double x_T = machine.x_explicit(out.exp_T, out.integral);
    sum_x += x_T;
    sum_x2 += x_T * x_T;
    sum_dev2 += (x_T - what) * (x_T - what);
    const double gap = x_T - out.x_euler_T;
    sum_gap2 += gap * gap;
    sum_exp += out.exp_T;
    sum_at += out.x_at;
    sum_at2 += out.x_at.cwiseProduct(out.x_at);
  }
  const double nn = static_cast<double>(cfg.paths);
  ExplicitEnsembleResult res;
  res.mean_x_T = sum_x / nn;
  res.se_x_T = std::sqrt(
      std::max(0.0, sum_x2 / nn - res.mean_x_T * res.mean_x_T) / nn);
  res.second_moment_about_what = sum_dev2 / nn;
  res.rms_gap_euler = std::sqrt(sum_gap2 / nn);
  res.mean_exp_T = sum_exp / nn;
  res.mean_x_at = sum_at / nn;
  res.se_x_at.resize(static_cast<Eigen::Index>(nr));
  for (size_t r = 0; r < nr; ++r) {
    const double mean = res.mean_x_at[static_cast<Eigen::Index>(r)];
    res.se_x_at[static_cast<Eigen::Index>(r)] = std::sqrt(
        std::max(0.0, sum_at2[static_cast<Eigen::Index>(r)] / nn - mean * mean) /
        nn);
  }
  return res;
}

std::vector<double> exposure_jump_sizes(const MarketModel& model) {
  std::vector<double> sizes;
  if (!model.jumps.active() || model.jumps.law != JumpSpec::Law::Atoms)
    return sizes;
  const EffectiveConstants ec = effective_constants(model);
  Eigen::LLT<Eigen::MatrixXd> llt(ec.sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("exposure_jump_sizes: Sigma is not positive definite");
  const Eigen::VectorXd q_gamma = ec.gamma.transpose() * llt.solve(ec.b);
  sizes.reserve(model.jumps.atom_sizes.size());
  for (const auto& e : model.jumps.atom_sizes) sizes.push_back(q_gamma.dot(e));
  return sizes;
}

void validate_exposure_jumps(const MarketModel& model, double tol) {
  for (double s : exposure_jump_sizes(model)) {
    if (std::abs(1.0 - s) <= tol) {
      std::ostringstream os;
      os << "explicit wealth: an atom produces an exposure jump of size " << s
         << ", which degenerates the stochastic exponential";
      throw std::runtime_error(os.str());
    }
  }
}

double lagrange_multiplier_closed(double K, double T, double x0, double zhat) {
  if (!(K > 0.0))
    throw std::domain_error("lagrange_multiplier_closed: requires K > 0");
  const double growth = std::exp(K * T);
  return (zhat * growth - x0) / (growth - 1.0);
}

MultiplierEstimate lagrange_multiplier_mc(const MarketModel& model,
                                          const AlphaBeta& ab, double x0,
                                          double zhat, const SimConfig& cfg,
                                          double lambda) {
  if (cfg.paths < 2)
    throw std::invalid_argument("lagrange_multiplier_mc: need at least two paths");
  // The exponential and integral statistics do not involve the multiplier,
  // so the machine runs with a placeholder target of zero.
  const ExplicitMachine machine(model, ab, x0, cfg, lambda, 0.0, {});

  double sum_p = 0.0, sum_p2 = 0.0, sum_q = 0.0, sum_q2 = 0.0, sum_pq = 0.0;
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    std::mt19937_64 rng = make_stream(cfg.seed, p, purpose::explicit_wealth);
    const PathOutput out = machine.walk(rng);
    const double pv = out.exp_T;
    const double qv = out.integral * out.exp_T;
    sum_p += pv;
    sum_p2 += pv * pv;
    sum_q += qv;
    sum_q2 += qv * qv;
    sum_pq += pv * qv;
  }
  const double nn = static_cast<double>(cfg.paths);
  const double mean_p = sum_p / nn;
  const double mean_q = sum_q / nn;
  const double var_p = std::max(0.0, sum_p2 / nn - mean_p * mean_p);
  const double var_q = std::max(0.0, sum_q2 / nn - mean_q * mean_q);
  const double cov_pq = sum_pq / nn - mean_p * mean_q;
  const double se_p = std::sqrt(var_p / nn);

  const double denom = 1.0 - mean_p;
  if (std::abs(denom) <= 3.0 * se_p)
    throw std::runtime_error(
        "lagrange_multiplier_mc: denominator 1 - E[exp_T] is statistically "
        "indistinguishable from zero");

  const double sql = std::sqrt(lambda / 2.0);
  const double what = (zhat - sql * mean_q - x0 * mean_p) / denom;
  // Delta method: d what / d P = (what - x0) / (1 - P),
  //               d what / d Q = -sqrt(lambda/2) / (1 - P).
  const double gp = (what - x0) / denom;
  const double gq = -sql / denom;
  const double var_what =
      (gp * gp * var_p + gq * gq * var_q + 2.0 * gp * gq * cov_pq) / nn;

  MultiplierEstimate est;
  est.what = what;
  est.se = std::sqrt(std::max(0.0, var_what));
  est.mean_exp_T = mean_p;
  return est;
}

double mean_wealth_curve(double K, double x0, double what, double t) {
  return what + (x0 - what) * std::exp(-K * t);
}

}  // namespace jumpex
