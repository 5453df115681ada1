#include "jumpex/convergence_lab.hpp"

#include <cmath>
#include <stdexcept>

#include "jumpex/linalg.hpp"
#include "jumpex/quadrature.hpp"
#include "jumpex/rng.hpp"

namespace jumpex {

namespace {

// Steps are attributed to [0, t] when the step's right endpoint is <= t.
bool step_in_window(const Partition& part, int i, double t) {
  return part.grid[i + 1] <= t + 1e-12;
}

Eigen::VectorXd block_direction(int z_dim, int offset, int len) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(z_dim);
  d.segment(offset, len).setConstant(1.0 / std::sqrt(static_cast<double>(len)));
  return d;
}

}  // namespace

void ProbeGrid::validate() const {
  if (probes.empty()) throw std::invalid_argument("ProbeGrid: no probes");
  if (labels.size() != probes.size())
    throw std::invalid_argument("ProbeGrid: labels/probes count mismatch");
  if (times.empty()) throw std::invalid_argument("ProbeGrid: no times");
  bool has_zero = false;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  const Eigen::Index dim = probes.front().size();
  for (const auto& u : probes) {
    if (u.size() != dim)
      throw std::invalid_argument("ProbeGrid: probe dimension mismatch");
    const double norm = u.norm();
    if (norm == 0.0) {
      has_zero = true;
    } else {
      lo = std::min(lo, norm);
      hi = std::max(hi, norm);
    }
  }
  if (!has_zero) throw std::invalid_argument("ProbeGrid: must contain u = 0");
  if (!(hi >= 100.0 * lo))
    throw std::invalid_argument(
        "ProbeGrid: probe norms must span two orders of magnitude");
  for (double t : times)
    if (!(t > 0.0)) throw std::invalid_argument("ProbeGrid: times must be positive");
}

ProbeGrid default_probe_grid(int D, std::vector<double> times) {
  const int z_dim = D * D + 3 * D;
  const Eigen::VectorXd d_w = block_direction(z_dim, 0, D);
  const Eigen::VectorXd d_m = block_direction(z_dim, D, D * D);
  const Eigen::VectorXd d_j = block_direction(z_dim, D + D * D, D);
  const Eigen::VectorXd d_k = block_direction(z_dim, 2 * D + D * D, D);
  const Eigen::VectorXd d_mix =
      Eigen::VectorXd::Constant(z_dim, 1.0 / std::sqrt(static_cast<double>(z_dim)));
  const Eigen::VectorXd d_wj = (d_w + d_j) / std::sqrt(2.0);
  const Eigen::VectorXd d_mk = (d_m + d_k) / std::sqrt(2.0);
  const Eigen::VectorXd d_jk = (d_j + d_k) / std::sqrt(2.0);

  ProbeGrid grid;
  grid.times = std::move(times);
  auto add = [&](const Eigen::VectorXd& dir, double scale, const std::string& tag) {
    grid.probes.push_back(scale * dir);
    grid.labels.push_back(tag);
  };
  add(Eigen::VectorXd::Zero(z_dim), 1.0, "zero");
  const double small_scales[] = {0.25, 1.0, 4.0};
  for (double s : small_scales) add(d_w, s, "brownian");
  for (double s : small_scales) add(d_m, s, "sheet");
  for (double s : small_scales) add(d_j, s, "jump");
  for (double s : small_scales) add(d_k, s, "mark");
  for (double s : small_scales) add(d_mix, s, "mixed");
  const double pair_scales[] = {1.0, 25.0};
  for (double s : pair_scales) add(d_wj, s, "brownian+jump");
  for (double s : pair_scales) add(d_mk, s, "sheet+mark");
  for (double s : pair_scales) add(d_jk, s, "jump+mark");
  add(d_j, 25.0, "jump");
  add(d_k, 25.0, "mark");
  grid.validate();
  return grid;
}

CfEstimate empirical_cf(const Eigen::MatrixXd& samples, const Eigen::VectorXd& u) {
  const Eigen::Index N = samples.rows();
  if (N < 1) throw std::invalid_argument("empirical_cf: need at least one sample");
  if (samples.cols() != u.size())
    throw std::invalid_argument("empirical_cf: probe dimension mismatch");
  const Eigen::VectorXd phase = samples * u;
  double sc = 0.0, ss = 0.0, sc2 = 0.0, ss2 = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    const double c = std::cos(phase[i]);
    const double s = std::sin(phase[i]);
    sc += c;
    ss += s;
    sc2 += c * c;
    ss2 += s * s;
  }
  const double nn = static_cast<double>(N);
  const double mc = sc / nn, ms = ss / nn;
  const double vc = std::max(0.0, sc2 / nn - mc * mc);
  const double vs = std::max(0.0, ss2 / nn - ms * ms);
  CfEstimate est;
  est.value = {mc, ms};
  est.se = std::sqrt((vc + vs) / nn);
  return est;
}

const CfCell& ConvergenceReport::cell(int n_index, int time_index,
                                      int probe_index) const {
  const int times = static_cast<int>(grid.times.size());
  const int probes = static_cast<int>(grid.probes.size());
  if (n_index < 0 || n_index >= static_cast<int>(n_family.size()) ||
      time_index < 0 || time_index >= times || probe_index < 0 ||
      probe_index >= probes)
    throw std::out_of_range("ConvergenceReport::cell: index out of range");
  return cells.at(static_cast<size_t>((n_index * times + time_index) * probes +
                                      probe_index));
}

ConvergenceReport cf_convergence_study(const MarketModel& model,
                                       const std::vector<int>& n_family,
                                       const ProbeGrid& grid, std::size_t paths,
                                       std::uint64_t seed, double gap_tolerance) {
  grid.validate();
  if (n_family.empty())
    throw std::invalid_argument("cf_convergence_study: empty grid family");
  if (paths == 0)
    throw std::invalid_argument("cf_convergence_study: need at least one path");
  const int D = model.dim();
  const int z_dim = model.z_dim();
  for (const auto& u : grid.probes)
    if (u.size() != z_dim)
      throw std::invalid_argument("cf_convergence_study: probe dimension mismatch");

  ConvergenceReport report;
  report.n_family = n_family;
  report.grid = grid;
  report.gap_tolerance = gap_tolerance;

  const size_t n_times = grid.times.size();
  const size_t n_probes = grid.probes.size();

  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::VectorXd comp = model.jumps.nu_m1();

  for (size_t k = 0; k < n_family.size(); ++k) {
    const int n = n_family[k];
    const Partition part = Partition::uniform(model.T, n);
    // Map recording times to grid indices (must land on grid points so the
    // discrete and limit laws are compared at identical times).
    std::vector<int> time_index(n_times);
    for (size_t ti = 0; ti < n_times; ++ti) {
      const double t = grid.times[ti];
      const int idx = static_cast<int>(std::lround(t / model.T * n));
      if (idx < 1 || idx > n || std::abs(part.grid[idx] - t) > 1e-9)
        throw std::invalid_argument(
            "cf_convergence_study: recording time does not land on the grid");
      time_index[ti] = idx;
    }

    // Accumulators: per (time, probe) sums of cos, sin and their squares.
    Eigen::MatrixXd sum_c = Eigen::MatrixXd::Zero(n_times, n_probes);
    Eigen::MatrixXd sum_s = Eigen::MatrixXd::Zero(n_times, n_probes);
    Eigen::MatrixXd sum_c2 = Eigen::MatrixXd::Zero(n_times, n_probes);
    Eigen::MatrixXd sum_s2 = Eigen::MatrixXd::Zero(n_times, n_probes);

    const double dt = model.T / n;
    const double sq_dt = std::sqrt(dt);
    std::poisson_distribution<int> pois(model.jumps.intensity * dt);
    const std::uint64_t level_seed = mix_seed(seed, static_cast<std::uint64_t>(k) + 1);

    Eigen::VectorXd w(D), m_sheet(D * D), l(2 * D), z(z_dim);
    Eigen::VectorXd dw(D), xi(D), jump_sum(D), dj(D);
    for (std::size_t p = 0; p < paths; ++p) {
      std::mt19937_64 rng = make_stream(level_seed, p, purpose::integrator_law);
      w.setZero();
      m_sheet.setZero();
      l.setZero();
      size_t next_time = 0;
      for (int i = 0; i < n && next_time < n_times; ++i) {
        for (int d = 0; d < D; ++d) dw[d] = sq_dt * normal(rng);
        for (int d = 0; d < D; ++d) xi[d] = normal(rng);
        jump_sum.setZero();
        if (model.jumps.active()) {
          const int count = pois(rng);
          for (int j = 0; j < count; ++j) jump_sum += model.jumps.sample(rng);
        }
        dj = jump_sum - dt * comp;
        w += dw;
        for (int d = 0; d < D; ++d)
          for (int dp = 0; dp < D; ++dp) m_sheet[d * D + dp] += xi[d] * dw[dp];
        l.segment(0, D) += dj;
        l.segment(D, D) += psi(model.damping, dj) * xi;
        while (next_time < n_times && time_index[next_time] == i + 1) {
          z.segment(0, D) = w;
          z.segment(D, D * D) = m_sheet;
          z.segment(D + D * D, 2 * D) = l;
          for (size_t pi = 0; pi < n_probes; ++pi) {
            const double phase = grid.probes[pi].dot(z);
            const double c = std::cos(phase), sn = std::sin(phase);
            sum_c(next_time, pi) += c;
            sum_s(next_time, pi) += sn;
            sum_c2(next_time, pi) += c * c;
            sum_s2(next_time, pi) += sn * sn;
          }
          ++next_time;
        }
      }
    }

    const double nn = static_cast<double>(paths);
    for (size_t ti = 0; ti < n_times; ++ti) {
      for (size_t pi = 0; pi < n_probes; ++pi) {
        CfCell cell;
        cell.n = n;
        cell.t = grid.times[ti];
        cell.probe = static_cast<int>(pi);
        cell.block = grid.labels[pi];
        const double mc = sum_c(ti, pi) / nn, ms = sum_s(ti, pi) / nn;
        cell.empirical = {mc, ms};
        const double vc = std::max(0.0, sum_c2(ti, pi) / nn - mc * mc);
        const double vs = std::max(0.0, sum_s2(ti, pi) / nn - ms * ms);
        cell.se = std::sqrt((vc + vs) / nn);
        const std::complex<double> kappa =
            limit_char_exponent(model, grid.probes[pi]);
        cell.limit = std::exp(-grid.times[ti] * kappa);
        cell.gap = std::abs(cell.empirical - cell.limit);
        cell.pass = cell.gap <= gap_tolerance + 3.0 * cell.se;
        report.cells.push_back(std::move(cell));
      }
    }
  }

  // Finest grid: every probe/time must pass.  Trend: per (time, probe), the
  // gap may not increase beyond combined Monte Carlo noise.
  report.finest_pass = true;
  const int n_last = static_cast<int>(n_family.size()) - 1;
  for (size_t ti = 0; ti < n_times; ++ti)
    for (size_t pi = 0; pi < n_probes; ++pi)
      report.finest_pass = report.finest_pass &&
                           report.cell(n_last, static_cast<int>(ti),
                                       static_cast<int>(pi)).pass;
  report.trend_pass = true;
  for (int k = 0; k + 1 <= n_last; ++k) {
    for (size_t ti = 0; ti < n_times; ++ti) {
      for (size_t pi = 0; pi < n_probes; ++pi) {
        const CfCell& c0 = report.cell(k, static_cast<int>(ti), static_cast<int>(pi));
        const CfCell& c1 =
            report.cell(k + 1, static_cast<int>(ti), static_cast<int>(pi));
        if (c1.gap > c0.gap + 2.0 * (c0.se + c1.se)) report.trend_pass = false;
      }
    }
  }
  report.pass = report.finest_pass && report.trend_pass;
  return report;
}

void VanishingTestFunction::validate() const {
  if (!(inner > 0.0))
    throw std::invalid_argument("VanishingTestFunction: inner radius must be > 0");
  if (!(outer > inner))
    throw std::invalid_argument("VanishingTestFunction: need outer > inner");
  if (power != 0 && power != 2)
    throw std::invalid_argument("VanishingTestFunction: power must be 0 or 2");
  if (!(cap > 0.0))
    throw std::invalid_argument("VanishingTestFunction: cap must be positive");
}

double VanishingTestFunction::operator()(const Eigen::VectorXd& z, int D) const {
  // Rising taper: 0 on [0, inner], 1 on [outer, inf).
  const double rise = 1.0 - smoothstep_taper(z.norm(), inner, outer);
  if (rise == 0.0) return 0.0;
  if (power == 0) return rise;
  const double q = z.tail(2 * D).squaredNorm();
  return rise * std::min(q, cap);
}

JumpFunctionalResult jump_functional_check(const MarketModel& model,
                                           const ScenarioSource& source,
                                           std::size_t paths, double t,
                                           const VanishingTestFunction& g) {
  g.validate();
  if (paths == 0)
    throw std::invalid_argument("jump_functional_check: need at least one path");
  const int D = model.dim();
  const int z_dim = model.z_dim();

  double sum = 0.0, sum_sq = 0.0;
  Eigen::VectorXd dz(z_dim);
  for (std::size_t p = 0; p < paths; ++p) {
    const DiscreteScenario s = source(p);
    double path_stat = 0.0;
    for (int i = 0; i < s.part.n; ++i) {
      if (!step_in_window(s.part, i, t)) break;
      dz = s.z_at(i + 1) - s.z_at(i);
      path_stat += g(dz, D);
    }
    sum += path_stat;
    sum_sq += path_stat * path_stat;
  }
  const double nn = static_cast<double>(paths);
  JumpFunctionalResult result;
  result.statistic = sum / nn;
  result.se = std::sqrt(
      std::max(0.0, sum_sq / nn - result.statistic * result.statistic) / nn);

  // Limit value: t * integral of g over the mark-augmented jump measure,
  // which is concentrated on points (0_W, 0_sheet, e, psi(e) u).
  Eigen::VectorXd point = Eigen::VectorXd::Zero(z_dim);
  result.analytic =
      model.jumps.active()
          ? t * model.jumps.intensity *
                model.jumps.law_expectation([&](const Eigen::VectorXd& e) {
                  const double scale = psi(model.damping, e);
                  return gauss_expectation(D, 64, [&](const Eigen::VectorXd& u) {
                    point.segment(D + D * D, D) = e;
                    point.segment(2 * D + D * D, D) = scale * u;
                    return g(point, D);
                  });
                })
          : 0.0;
  result.gap = std::abs(result.statistic - result.analytic);
  return result;
}

Eigen::VectorXd Truncation::operator()(const Eigen::VectorXd& z) const {
  return smoothstep_taper(z.norm(), inner, outer) * z;
}

CharacteristicsReport characteristics_check(const MarketModel& model,
                                            const ScenarioSource& source,
                                            std::size_t paths, double t,
                                            const Truncation& h) {
  if (paths == 0)
    throw std::invalid_argument("characteristics_check: need at least one path");
  const int D = model.dim();
  const int z_dim = model.z_dim();

  // Per-path sums of h(dZ) and of h(dZ) h(dZ)^T over steps in [0, t].
  Eigen::VectorXd drift_sum = Eigen::VectorXd::Zero(z_dim);
  Eigen::VectorXd drift_sum_sq = Eigen::VectorXd::Zero(z_dim);
  Eigen::MatrixXd cov_sum = Eigen::MatrixXd::Zero(z_dim, z_dim);
  Eigen::MatrixXd cov_sum_sq = Eigen::MatrixXd::Zero(z_dim, z_dim);

  Eigen::VectorXd dz(z_dim), hz(z_dim);
  for (std::size_t p = 0; p < paths; ++p) {
    const DiscreteScenario s = source(p);
    Eigen::VectorXd path_drift = Eigen::VectorXd::Zero(z_dim);
    Eigen::MatrixXd path_cov = Eigen::MatrixXd::Zero(z_dim, z_dim);
    for (int i = 0; i < s.part.n; ++i) {
      if (!step_in_window(s.part, i, t)) break;
      dz = s.z_at(i + 1) - s.z_at(i);
      hz = h(dz);
      path_drift += hz;
      path_cov.noalias() += hz * hz.transpose();
    }
    drift_sum += path_drift;
    drift_sum_sq += path_drift.cwiseProduct(path_drift);
    cov_sum += path_cov;
    cov_sum_sq += path_cov.cwiseProduct(path_cov);
  }
  const double nn = static_cast<double>(paths);

  // Analytic first characteristic: only the jump/mark rows are charged,
  //   B^(k) = t * intensity * E_{e,u}[ h^(k)(0,0,e,psi(e)u) - z^(k)(e,u) ].
  // Analytic modified second characteristic:
  //   C~ = t * I on the Brownian and sheet coordinates
  //      + t * intensity * E_{e,u}[ h h^T (0,0,e,psi(e)u) ].
  Eigen::VectorXd drift_analytic = Eigen::VectorXd::Zero(z_dim);
  Eigen::MatrixXd cov_analytic = Eigen::MatrixXd::Zero(z_dim, z_dim);
  cov_analytic.topLeftCorner(D + D * D, D + D * D) =
      t * Eigen::MatrixXd::Identity(D + D * D, D + D * D);
  if (model.jumps.active()) {
    Eigen::VectorXd point = Eigen::VectorXd::Zero(z_dim);
    for (int k = 0; k < z_dim; ++k) {
      drift_analytic[k] =
          t * model.jumps.intensity *
          model.jumps.law_expectation([&](const Eigen::VectorXd& e) {
            const double scale = psi(model.damping, e);
            return gauss_expectation(D, 64, [&](const Eigen::VectorXd& u) {
              point.segment(D + D * D, D) = e;
              point.segment(2 * D + D * D, D) = scale * u;
              return h(point)[k] - point[k];
            });
          });
    }
    for (int k = 0; k < z_dim; ++k) {
      for (int l = k; l < z_dim; ++l) {
        const double jump_part =
            t * model.jumps.intensity *
            model.jumps.law_expectation([&](const Eigen::VectorXd& e) {
              const double scale = psi(model.damping, e);
              return gauss_expectation(D, 64, [&](const Eigen::VectorXd& u) {
                point.segment(D + D * D, D) = e;
                point.segment(2 * D + D * D, D) = scale * u;
                const Eigen::VectorXd hp = h(point);
                return hp[k] * hp[l];
              });
            });
        cov_analytic(k, l) += jump_part;
        if (l != k) cov_analytic(l, k) += jump_part;
      }
    }
  }

  CharacteristicsReport report;
  report.t = t;
  for (int k = 0; k < z_dim; ++k) {
    CharacteristicsCell cell;
    cell.k = k;
    cell.l = -1;
    cell.empirical = drift_sum[k] / nn;
    cell.se = std::sqrt(
        std::max(0.0, drift_sum_sq[k] / nn - cell.empirical * cell.empirical) / nn);
    cell.analytic = drift_analytic[k];
    cell.gap = std::abs(cell.empirical - cell.analytic);
    if (cell.se > 0.0)
      report.max_drift_zscore = std::max(report.max_drift_zscore, cell.gap / cell.se);
    report.drift.push_back(std::move(cell));
  }
  for (int k = 0; k < z_dim; ++k) {
    for (int l = k; l < z_dim; ++l) {
      CharacteristicsCell cell;
      cell.k = k;
      cell.l = l;
      cell.empirical = cov_sum(k, l) / nn;
      cell.se = std::sqrt(
          std::max(0.0, cov_sum_sq(k, l) / nn - cell.empirical * cell.empirical) /
          nn);
      cell.analytic = cov_analytic(k, l);
      cell.gap = std::abs(cell.empirical - cell.analytic);
      if (cell.se > 0.0)
        report.max_cov_zscore = std::max(report.max_cov_zscore, cell.gap / cell.se);
      report.covariance.push_back(std::move(cell));
    }
  }
  return report;
}

IndependenceReport independence_check(const Eigen::MatrixXd& brownian_block,
                                      const Eigen::MatrixXd& jump_block) {
  const Eigen::Index N = brownian_block.rows();
  if (N < 2 || jump_block.rows() != N)
    throw std::invalid_argument(
        "independence_check: blocks need matching rows (>= 2)");
  const Eigen::Index ca = brownian_block.cols(), cb = jump_block.cols();

  IndependenceReport report;
  // Cross-correlations.
  const Eigen::RowVectorXd mean_a = brownian_block.colwise().mean();
  const Eigen::RowVectorXd mean_b = jump_block.colwise().mean();
  Eigen::MatrixXd centered_a = brownian_block.rowwise() - mean_a;
  Eigen::MatrixXd centered_b = jump_block.rowwise() - mean_b;
  const Eigen::VectorXd sd_a =
      (centered_a.colwise().squaredNorm() / static_cast<double>(N))
          .cwiseSqrt()
          .transpose();
  const Eigen::VectorXd sd_b =
      (centered_b.colwise().squaredNorm() / static_cast<double>(N))
          .cwiseSqrt()
          .transpose();
  for (Eigen::Index i = 0; i < ca; ++i) {
    for (Eigen::Index j = 0; j < cb; ++j) {
      if (sd_a[i] <= 0.0 || sd_b[j] <= 0.0) continue;
      const double cov =
          centered_a.col(i).dot(centered_b.col(j)) / static_cast<double>(N);
      report.max_abs_corr =
          std::max(report.max_abs_corr, std::abs(cov / (sd_a[i] * sd_b[j])));
    }
  }
  report.corr_se = 1.0 / std::sqrt(static_cast<double>(N));

  // Characteristic-function factorization over 8 probe pairs: scaled
  // all-ones directions in each block.
  const Eigen::VectorXd dir_a =
      Eigen::VectorXd::Constant(ca, 1.0 / std::sqrt(static_cast<double>(ca)));
  const Eigen::VectorXd dir_b =
      Eigen::VectorXd::Constant(cb, 1.0 / std::sqrt(static_cast<double>(cb)));
  const double scale_pairs[8][2] = {{0.5, 0.5}, {1.0, 1.0}, {2.0, 2.0},
                                    {4.0, 4.0}, {0.5, 2.0}, {2.0, 0.5},
                                    {1.0, 4.0}, {4.0, 1.0}};
  for (const auto& sp : scale_pairs) {
    const Eigen::VectorXd ua = sp[0] * dir_a;
    const Eigen::VectorXd ub = sp[1] * dir_b;
    const Eigen::VectorXd phase_a = brownian_block * ua;
    const Eigen::VectorXd phase_b = jump_block * ub;
    double jc = 0.0, js = 0.0, ac = 0.0, as = 0.0, bc = 0.0, bs = 0.0;
    double jc2 = 0.0, js2 = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double pa = phase_a[i], pb = phase_b[i];
      const double cj = std::cos(pa + pb), sj = std::sin(pa + pb);
      jc += cj;
      js += sj;
      jc2 += cj * cj;
      js2 += sj * sj;
      ac += std::cos(pa);
      as += std::sin(pa);
      bc += std::cos(pb);
      bs += std::sin(pb);
    }
    const double nn = static_cast<double>(N);
    const std::complex<double> joint(jc / nn, js / nn);
    const std::complex<double> fa(ac / nn, as / nn);
    const std::complex<double> fb(bc / nn, bs / nn);
    const double gap = std::abs(joint - fa * fb);
    const double var_j = std::max(
        0.0, (jc2 + js2) / nn - std::norm(joint));
    // Conservative noise scale: joint-CF standard error plus the marginal
    // products' (each marginal se is <= 1/sqrt(N)).
    const double se = std::sqrt(var_j / nn) + 2.0 / std::sqrt(nn);
    if (gap > report.max_cf_gap) {
      report.max_cf_gap = gap;
      report.cf_gap_se = se;
    }
  }
  return report;
}

}  // namespace jumpex
