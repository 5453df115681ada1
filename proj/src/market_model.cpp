#include "jumpex/market_model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "jumpex/linalg.hpp"
#include "jumpex/quadrature.hpp"

namespace jumpex {

namespace {

std::string vec_to_string(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ")";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// JumpSpec
// ---------------------------------------------------------------------------

JumpSpec JumpSpec::none(int D) {
  JumpSpec spec;
  spec.intensity = 0.0;
  spec.law = Law::Atoms;
  spec.D = D;
  spec.m1 = Eigen::VectorXd::Zero(D);
  spec.m2 = Eigen::MatrixXd::Zero(D, D);
  return spec;
}

JumpSpec JumpSpec::atoms(double intensity, std::vector<Eigen::VectorXd> sizes,
                         std::vector<double> probs) {
  JumpSpec spec;
  spec.intensity = intensity;
  spec.law = Law::Atoms;
  if (sizes.empty()) throw std::invalid_argument("JumpSpec::atoms: no atoms given");
  spec.D = static_cast<int>(sizes.front().size());
  spec.atom_sizes = std::move(sizes);
  spec.atom_probs = std::move(probs);
  spec.m1 = Eigen::VectorXd::Zero(spec.D);
  spec.m2 = Eigen::MatrixXd::Zero(spec.D, spec.D);
  for (size_t k = 0; k < spec.atom_sizes.size(); ++k) {
    spec.m1 += spec.atom_probs.at(k) * spec.atom_sizes[k];
    spec.m2 += spec.atom_probs.at(k) * spec.atom_sizes[k] *
               spec.atom_sizes[k].transpose();
  }
  spec.validate();
  return spec;
}

JumpSpec JumpSpec::gaussian(double intensity, Eigen::VectorXd mean, double sd) {
  JumpSpec spec;
  spec.intensity = intensity;
  spec.law = Law::Gaussian;
  spec.D = static_cast<int>(mean.size());
  spec.gauss_mean = std::move(mean);
  spec.gauss_sd = sd;
  spec.m1 = spec.gauss_mean;
  spec.m2 = spec.gauss_mean * spec.gauss_mean.transpose() +
            sd * sd * Eigen::MatrixXd::Identity(spec.D, spec.D);
  spec.validate();
  return spec;
}

JumpSpec JumpSpec::uniform_box(double intensity, Eigen::VectorXd lo,
                               Eigen::VectorXd hi) {
  JumpSpec spec;
  spec.intensity = intensity;
  spec.law = Law::UniformBox;
  spec.D = static_cast<int>(lo.size());
  spec.box_lo = std::move(lo);
  spec.box_hi = std::move(hi);
  spec.m1 = 0.5 * (spec.box_lo + spec.box_hi);
  // Independent coordinates: E[e e^T] = m1 m1^T + diag((hi - lo)^2 / 12).
  spec.m2 = spec.m1 * spec.m1.transpose();
  for (int d = 0; d < spec.D; ++d) {
    const double w = spec.box_hi[d] - spec.box_lo[d];
    spec.m2(d, d) += w * w / 12.0;
  }
  spec.validate();
  return spec;
}

void JumpSpec::validate() const {
  if (intensity < 0.0)
    throw std::invalid_argument("JumpSpec: intensity must be non-negative");
  if (D < 1) throw std::invalid_argument("JumpSpec: dimension must be positive");
  if (m1.size() != D || m2.rows() != D || m2.cols() != D)
    throw std::invalid_argument("JumpSpec: moment dimensions do not match D");
  if (!active()) return;
  switch (law) {
    case Law::Atoms: {
      if (atom_sizes.empty())
        throw std::invalid_argument("JumpSpec: atom law needs at least one atom");
      if (atom_sizes.size() != atom_probs.size())
        throw std::invalid_argument(
            "JumpSpec: atom sizes and probabilities differ in count");
      double total = 0.0;
      for (size_t k = 0; k < atom_sizes.size(); ++k) {
        if (atom_sizes[k].size() != D)
          throw std::invalid_argument("JumpSpec: atom dimension mismatch");
        if (atom_probs[k] < 0.0)
          throw std::invalid_argument("JumpSpec: negative atom probability");
        total += atom_probs[k];
      }
      if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument(
            "JumpSpec: atom probabilities must sum to one");
      break;
    }
    case Law::Gaussian:
      if (gauss_mean.size() != D)
        throw std::invalid_argument("JumpSpec: gaussian mean dimension mismatch");
      if (gauss_sd <= 0.0)
        throw std::invalid_argument("JumpSpec: gaussian sd must be positive");
      break;
    case Law::UniformBox:
      if (box_lo.size() != D || box_hi.size() != D)
        throw std::invalid_argument("JumpSpec: box dimension mismatch");
      for (int d = 0; d < D; ++d)
        if (!(box_hi[d] > box_lo[d]))
          throw std::invalid_argument("JumpSpec: box needs hi > lo coordinatewise");
      break;
  }
  if (!is_psd(m2, 1e-9))
    throw std::invalid_argument("JumpSpec: second moment matrix is not PSD");
}

Eigen::VectorXd JumpSpec::sample(std::mt19937_64& rng) const {
  switch (law) {
    case Law::Atoms: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double u = unif(rng);
      for (size_t k = 0; k < atom_sizes.size(); ++k) {
        u -= atom_probs[k];
        if (u <= 0.0) return atom_sizes[k];
      }
      return atom_sizes.back();
    }
    case Law::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::VectorXd e(D);
      for (int d = 0; d < D; ++d) e[d] = gauss_mean[d] + gauss_sd * normal(rng);
      return e;
    }
    case Law::UniformBox: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Eigen::VectorXd e(D);
      for (int d = 0; d < D; ++d)
        e[d] = box_lo[d] + (box_hi[d] - box_lo[d]) * unif(rng);
      return e;
    }
  }
  throw std::logic_error("JumpSpec::sample: unknown law");
}

double JumpSpec::law_expectation(
    const std::function<double(const Eigen::VectorXd&)>& f,
    int nodes_per_dim) const {
  switch (law) {
    case Law::Atoms: {
      double total = 0.0;
      for (size_t k = 0; k < atom_sizes.size(); ++k)
        total += atom_probs[k] * f(atom_sizes[k]);
      return total;
    }
    case Law::Gaussian:
      return gauss_expectation(D, nodes_per_dim, [&](const Eigen::VectorXd& x) {
        return f(gauss_mean + gauss_sd * x);
      });
    case Law::UniformBox: {
      // Tensor Gauss-Legendre with the box volume normalized out.
      std::vector<QuadratureRule> rules;
      rules.reserve(static_cast<size_t>(D));
      double volume = 1.0;
      for (int d = 0; d < D; ++d) {
        rules.push_back(gauss_legendre(nodes_per_dim, box_lo[d], box_hi[d]));
        volume *= box_hi[d] - box_lo[d];
      }
      std::vector<int> index(static_cast<size_t>(D), 0);
      Eigen::VectorXd point(D);
      double total = 0.0;
      while (true) {
        double w = 1.0;
        for (int d = 0; d < D; ++d) {
          point[d] = rules[static_cast<size_t>(d)].nodes[index[static_cast<size_t>(d)]];
          w *= rules[static_cast<size_t>(d)].weights[index[static_cast<size_t>(d)]];
        }
        total += w * f(point);
        int d = 0;
        for (; d < D; ++d) {
          if (++index[static_cast<size_t>(d)] < nodes_per_dim) break;
          index[static_cast<size_t>(d)] = 0;
        }
        if (d == D) break;
      }
      return total / volume;
    }
  }
  throw std::logic_error("JumpSpec::law_expectation: unknown law");
}

// ---------------------------------------------------------------------------
// Damping
// ---------------------------------------------------------------------------

double psi(const Damping& d, const Eigen::VectorXd& x) {
  return std::sqrt(x.squaredNorm() + d.c * d.c) - d.c;
}

double psi(const Damping& d, double x) {
  return std::sqrt(x * x + d.c * d.c) - d.c;
}

// ---------------------------------------------------------------------------
// CoefficientField
// ---------------------------------------------------------------------------

CoefficientField CoefficientField::constant(Eigen::VectorXd b, Eigen::MatrixXd a,
                                            Eigen::MatrixXd gamma) {
  CoefficientField c;
  c.variant = Variant::Constant;
  c.D = static_cast<int>(b.size());
  if (a.rows() != c.D || a.cols() != c.D || gamma.rows() != c.D ||
      gamma.cols() != c.D)
    throw std::invalid_argument(
        "CoefficientField::constant: matrix dimensions must match b");
  c.b_const = std::move(b);
  c.a_const = std::move(a);
  c.gamma_const = std::move(gamma);
  return c;
}

CoefficientField CoefficientField::proportional(double u0, double u1,
                                                Eigen::VectorXd b_tilde,
                                                Eigen::MatrixXd a_tilde,
                                                Eigen::MatrixXd gamma_tilde) {
  CoefficientField c;
  c.variant = Variant::Proportional;
  c.D = static_cast<int>(b_tilde.size());
  if (a_tilde.rows() != c.D || a_tilde.cols() != c.D ||
      gamma_tilde.rows() != c.D || gamma_tilde.cols() != c.D)
    throw std::invalid_argument(
        "CoefficientField::proportional: matrix dimensions must match b_tilde");
  // The scale must stay bounded away from zero: u0 > 0 and u0 + u1 > 0 ensure
  // u0 + u1 / (1 + ||y||^2) >= min(u0, u0 + u1) > 0.
  if (!(u0 > 0.0) || !(u0 + u1 > 0.0))
    throw std::invalid_argument(
        "CoefficientField::proportional: need u0 > 0 and u0 + u1 > 0");
  if (b_tilde.norm() == 0.0)
    throw std::invalid_argument(
        "CoefficientField::proportional: b_tilde must be nonzero");
  if (std::abs(a_tilde.determinant()) < 1e-14)
    throw std::invalid_argument(
        "CoefficientField::proportional: a_tilde must be invertible");
  c.u0 = u0;
  c.u1 = u1;
  c.b_tilde = std::move(b_tilde);
  c.a_tilde = std::move(a_tilde);
  c.gamma_tilde = std::move(gamma_tilde);
  return c;
}

double CoefficientField::u_scalar(const Eigen::VectorXd& y) const {
  if (is_constant()) return 1.0;
  return u0 + u1 / (1.0 + y.squaredNorm());
}

Eigen::VectorXd CoefficientField::b(const Eigen::VectorXd& y) const {
  return is_constant() ? b_const : Eigen::VectorXd(u_scalar(y) * b_tilde);
}

Eigen::MatrixXd CoefficientField::a(const Eigen::VectorXd& y) const {
  return is_constant() ? a_const : Eigen::MatrixXd(u_scalar(y) * a_tilde);
}

Eigen::MatrixXd CoefficientField::gamma(const Eigen::VectorXd& y) const {
  return is_constant() ? gamma_const : Eigen::MatrixXd(u_scalar(y) * gamma_tilde);
}

Eigen::MatrixXd CoefficientField::A(const Eigen::VectorXd& y) const {
  const Eigen::MatrixXd av = a(y);
  return av * av.transpose();
}

// ---------------------------------------------------------------------------
// Model-level helpers
// ---------------------------------------------------------------------------

Eigen::MatrixXd sigma_matrix(const MarketModel& model, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd g = model.coeffs.gamma(y);
  Eigen::MatrixXd sigma = model.coeffs.A(y) + g * model.jumps.nu_m2() * g.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("sigma_matrix: not positive definite at y = " +
                             vec_to_string(y));
  }
  return sigma;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_augmented_jump(
    const MarketModel& model, std::mt19937_64& rng) {
  Eigen::VectorXd e = model.jumps.sample(rng);
  const double scale = psi(model.damping, e);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(model.dim());
  for (int d = 0; d < model.dim(); ++d) v[d] = scale * normal(rng);
  return {std::move(e), std::move(v)};
}

std::complex<double> limit_char_exponent(const MarketModel& model,
                                         const Eigen::VectorXd& u) {
  const int D = model.dim();
  if (u.size() != model.z_dim())
    throw std::invalid_argument("limit_char_exponent: u has wrong dimension");
  const auto u_w = u.segment(0, D);
  const auto u_sheet = u.segment(D, D * D);
  const Eigen::VectorXd u_jump = u.segment(D + D * D, D);
  const Eigen::VectorXd u_mark = u.segment(2 * D + D * D, D);

  std::complex<double> kappa(0.5 * u_w.squaredNorm() + 0.5 * u_sheet.squaredNorm(),
                             0.0);
  if (model.jumps.active()) {
    // E_e[ 1 - exp(i u_J . e - 0.5 psi(e)^2 ||u_mark||^2) + i u_J . e ],
    // the Gaussian mark integrated out in closed form.
    const double mark_sq = u_mark.squaredNorm();
    const auto term = [&](const Eigen::VectorXd& e) -> std::complex<double> {
      const double phase = u_jump.dot(e);
      const double p = psi(model.damping, e);
      const double damp = std::exp(-0.5 * p * p * mark_sq);
      return std::complex<double>(1.0 - damp * std::cos(phase),
                                  phase - damp * std::sin(phase));
    };
    const double re = model.jumps.law_expectation(
        [&](const Eigen::VectorXd& e) { return term(e).real(); });
    const double im = model.jumps.law_expectation(
        [&](const Eigen::VectorXd& e) { return term(e).imag(); });
    kappa += model.jumps.intensity * std::complex<double>(re, im);
  }
  return kappa;
}

void validate_model(const MarketModel& model, const Eigen::VectorXd& y_center,
                    int probes, double box_halfwidth) {
  const int D = model.dim();
  if (D < 1) throw std::invalid_argument("validate_model: dimension must be >= 1");
  if (!(model.T > 0.0))
    throw std::invalid_argument("validate_model: horizon must be positive");
  if (!(model.damping.c > 0.0))
    throw std::invalid_argument("validate_model: damping constant must be positive");
  if (model.jumps.D != D)
    throw std::invalid_argument("validate_model: jump dimension mismatch");
  model.jumps.validate();
  if (y_center.size() != D)
    throw std::invalid_argument("validate_model: y_center dimension mismatch");
  for (const Eigen::VectorXd& y :
       halton_box_points(probes, D, y_center, box_halfwidth)) {
    sigma_matrix(model, y);  // throws if not positive definite
  }
}

std::vector<Eigen::VectorXd> halton_box_points(int count, int dim,
                                               const Eigen::VectorXd& center,
                                               double halfwidth) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (dim > static_cast<int>(sizeof(primes) / sizeof(primes[0])))
    throw std::invalid_argument("halton_box_points: dimension too large");
  std::vector<Eigen::VectorXd> points;
  points.reserve(static_cast<size_t>(count));
  for (int k = 1; k <= count; ++k) {
    Eigen::VectorXd p(dim);
    for (int d = 0; d < dim; ++d) {
      // Radical-inverse of k in base primes[d].
      double value = 0.0, f = 1.0 / primes[d];
      int i = k;
      while (i > 0) {
        value += f * (i % primes[d]);
        i /= primes[d];
        f /= primes[d];
      }
      p[d] = center[d] + halfwidth * (2.0 * value - 1.0);
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace jumpex
