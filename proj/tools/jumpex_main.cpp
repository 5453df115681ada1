#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "jumpex/config_io.hpp"
#include "jumpex/convergence_lab.hpp"
#include "jumpex/discrete_scheme.hpp"
#include "jumpex/exploratory_sde.hpp"
#include "jumpex/market_model.hpp"
#include "jumpex/optimal_control.hpp"
#include "jumpex/report.hpp"

namespace {

using namespace jumpex;

struct CliOptions {
  std::string experiment;
  std::string config_path;
  std::uint64_t seed = 1;
  std::size_t paths = 20000;
  int steps = 256;
  std::string out_dir = "reports";
  bool want_json = false;
  bool want_csv = false;
};

const std::vector<std::string> kExperiments = {
    "converge", "value-check", "lagrange", "hjb", "demo-sample-state"};

CheckRow make_row(std::string name, double estimate, double se, double target,
                  double tolerance, bool pass, std::string note,
                  bool exact = false) {
  CheckRow row;
  row.name = std::move(name);
  row.estimate = estimate;
  row.exact = exact;
  row.se = se;
  row.target = target;
  row.tolerance = tolerance;
  row.pass = pass;
  row.note = std::move(note);
  return row;
}

CheckRow gap_row(std::string name, double estimate, double se, double target,
                 double tolerance, std::string note) {
  const bool pass = std::abs(estimate - target) <= tolerance;
  return make_row(std::move(name), estimate, se, target, tolerance, pass,
                  std::move(note));
}

void run_converge(const ProblemSpec& spec, const CliOptions& opt,
                  ExperimentReport& rep) {
  const std::vector<int> family = {16, 64, 256, 1024};
  const ProbeGrid grid =
      default_probe_grid(spec.model.dim(), {spec.model.T / 2.0, spec.model.T});
  const double tol = 0.02;
  rep.thresholds["gap_tolerance"] = tol;
  const ConvergenceReport conv =
      cf_convergence_study(spec.model, family, grid, opt.paths, opt.seed, tol);

  const int n_times = static_cast<int>(grid.times.size());
  const int n_probes = static_cast<int>(grid.probes.size());
  for (size_t k = 0; k < family.size(); ++k) {
    double max_gap = 0.0, max_se = 0.0;
    for (int ti = 0; ti < n_times; ++ti) {
      for (int pi = 0; pi < n_probes; ++pi) {
        const CfCell& cell = conv.cell(static_cast<int>(k), ti, pi);
        max_gap = std::max(max_gap, cell.gap);
        max_se = std::max(max_se, cell.se);
      }
    }
    const bool is_finest = k + 1 == family.size();
    std::ostringstream name;
    name << "max_cf_gap_n" << family[k];
    rep.rows.push_back(make_row(
        name.str(), max_gap, max_se, 0.0, is_finest ? tol + 3.0 * max_se : max_gap,
        !is_finest || max_gap <= tol + 3.0 * max_se,
        is_finest ? "largest CF gap over all probes/times at the finest grid"
                  : "informational: largest CF gap at this grid size"));
  }
  double trend_excess = -1e300;
  for (size_t k = 0; k + 1 < family.size(); ++k) {
    for (int ti = 0; ti < n_times; ++ti) {
      for (int pi = 0; pi < n_probes; ++pi) {
        const CfCell& c0 = conv.cell(static_cast<int>(k), ti, pi);
        const CfCell& c1 = conv.cell(static_cast<int>(k) + 1, ti, pi);
        trend_excess = std::max(
            trend_excess, c1.gap - c0.gap - 2.0 * (c0.se + c1.se));
      }
    }
  }
  rep.rows.push_back(make_row(
      "gap_trend_non_increasing", trend_excess, 0.0, 0.0, 0.0,
      conv.trend_pass,
      "max increase of the CF gap between consecutive grid sizes, minus noise"));
}

void run_value_check(const ProblemSpec& spec, const CliOptions& opt,
                     ExperimentReport& rep) {
  const AlphaBeta ab = solve_alpha_beta(spec.model, spec.lambda, 0.0);
  const double what =
      lagrange_multiplier_closed(ab.K, ab.T, spec.x0, spec.zhat);
  AlphaBeta ab_w = ab;
  ab_w.what = what;
  const double v_closed = value_function(ab_w, 0.0, spec.x0, spec.y0);

  SimConfig cfg;
  cfg.steps = opt.steps;
  cfg.paths = opt.paths;
  cfg.seed = opt.seed;
  const double bias_allowance = 0.2 / opt.steps;
  rep.thresholds["sigma_band"] = 4.0;
  rep.thresholds["euler_bias_allowance"] = bias_allowance;

  const GaussianFeedbackLaw law = optimal_law(ab_w, spec.model);
  const CostEstimate opt_cost =
      simulate_exploratory(spec.model, law, spec.x0, spec.y0, cfg, what,
                           spec.lambda);
  rep.rows.push_back(gap_row(
      "optimal_cost_mc_vs_closed", opt_cost.value, opt_cost.se, v_closed,
      4.0 * opt_cost.se + bias_allowance,
      "Monte Carlo cost of the optimal law against the closed-form value"));
  rep.rows.push_back(gap_row(
      "terminal_mean_vs_target", opt_cost.terminal_mean,
      opt_cost.terminal_mean_se, spec.zhat,
      4.0 * opt_cost.terminal_mean_se + bias_allowance,
      "terminal mean under the optimal law against the attainment target"));

  SimConfig cfg_sub = cfg;
  cfg_sub.seed = opt.seed + 1;
  const struct {
    double mean_factor, cov_factor;
    const char* name;
  } variants[] = {{1.0, 2.0, "suboptimal_cov_x2_excess"},
                  {0.7, 1.0, "suboptimal_mean_x0.7_excess"}};
  for (const auto& v : variants) {
    const GaussianFeedbackLaw sub =
        scale_law(law, v.mean_factor, v.cov_factor, v.name);
    const CostEstimate sub_cost =
        simulate_exploratory(spec.model, sub, spec.x0, spec.y0, cfg_sub, what,
                             spec.lambda);
    const double excess = sub_cost.value - v_closed;
    const double noise = 4.0 * sub_cost.se + bias_allowance;
    rep.rows.push_back(make_row(
        v.name, excess, sub_cost.se, 0.0, noise, excess >= -noise,
        "perturbed law must not beat the closed-form optimum"));
  }
}

void run_lagrange(const ProblemSpec& spec, const CliOptions& opt,
                  ExperimentReport& rep) {
  const AlphaBeta ab = solve_alpha_beta(spec.model, spec.lambda, 0.0);
  const double what_closed =
      lagrange_multiplier_closed(ab.K, ab.T, spec.x0, spec.zhat);
  AlphaBeta ab_w = ab;
  ab_w.what = what_closed;

  SimConfig cfg;
  cfg.steps = opt.steps;
  cfg.paths = opt.paths;
  cfg.seed = opt.seed;
  rep.thresholds["sigma_band"] = 4.0;

  const MultiplierEstimate mc =
      lagrange_multiplier_mc(spec.model, ab, spec.x0, spec.zhat, cfg, spec.lambda);
  rep.rows.push_back(gap_row(
      "multiplier_mc_vs_closed", mc.what, mc.se, what_closed, 4.0 * mc.se,
      "Monte Carlo multiplier against the closed form"));

  // Var(exp_T) = e^{-KT} - e^{-2KT} in closed form.
  const double p_exact = std::exp(-ab.K * ab.T);
  const double se_p = std::sqrt(
      (p_exact - p_exact * p_exact) / static_cast<double>(opt.paths));
  rep.rows.push_back(gap_row(
      "mean_exp_T_vs_exact", mc.mean_exp_T, se_p, p_exact, 4.0 * se_p,
      "mean stochastic exponential against its exact expectation"));

  SimConfig cfg2 = cfg;
  cfg2.seed = opt.seed + 1;
  const ExplicitEnsembleResult ens = simulate_optimal_wealth_explicit(
      spec.model, ab_w, spec.x0, spec.y0, cfg2, spec.lambda, what_closed);
  rep.rows.push_back(gap_row(
      "terminal_mean_attains_target", ens.mean_x_T, ens.se_x_T, spec.zhat,
      4.0 * ens.se_x_T,
      "terminal mean of the explicit optimal wealth against the target"));
}

void run_hjb(const ProblemSpec& spec, const CliOptions& opt,
             ExperimentReport& rep) {
  (void)opt;
  const AlphaBeta ab = solve_alpha_beta(spec.model, spec.lambda, 0.0);
  AlphaBeta ab_w = ab;
  ab_w.what = lagrange_multiplier_closed(ab.K, ab.T, spec.x0, spec.zhat);
  const auto probes = default_hjb_probes(spec.model, spec.x0);
  const double residual_tol = 1e-6;
  const double detector_min = 1e-3;
  rep.thresholds["residual_tol"] = residual_tol;
  rep.thresholds["detector_min"] = detector_min;

  const double r0 = hjb_residual(ab_w, spec.model, probes);
  rep.rows.push_back(make_row(
      "residual_true_coefficients", r0, 0.0, 0.0, residual_tol,
      r0 <= residual_tol,
      "max dynamic-programming residual with the solved coefficients"));

  AlphaBeta ab_bad = ab_w;
  ab_bad.K *= 1.01;
  const double r1 = hjb_residual(ab_bad, spec.model, probes);
  rep.rows.push_back(make_row(
      "residual_detects_wrong_decay", r1, 0.0, detector_min, detector_min,
      r1 >= detector_min,
      "residual must flag a 1% perturbation of the decay rate"));
}

void run_demo(const ProblemSpec& spec, const CliOptions& opt,
              ExperimentReport& rep) {
  const int D = spec.model.dim();
  const AlphaBeta ab = solve_alpha_beta(spec.model, spec.lambda, 0.0);
  const double what =
      lagrange_multiplier_closed(ab.K, ab.T, spec.x0, spec.zhat);
  AlphaBeta ab_w = ab;
  ab_w.what = what;

  auto info = [&](std::string name, double value, std::string note) {
    rep.rows.push_back(make_row(std::move(name), value, 0.0, value, 0.0, true,
                                std::move(note), /*exact=*/true));
  };
  info("decay_rate_K", ab.K, "quadratic decay rate of the value coefficient");
  info("alpha_at_0", ab.alpha(0.0), "value curvature at time zero");
  info("beta_at_0", ab_w.beta(0.0, spec.y0).first, "value offset at time zero");
  info("multiplier", what, "closed-form quadratic-penalty center");
  info("value_at_start", value_function(ab_w, 0.0, spec.x0, spec.y0),
       "closed-form optimal cost from the initial state");

  const int demo_steps = std::min(opt.steps, 16);
  const Partition part = Partition::uniform(spec.model.T, demo_steps);
  const MomentDecomposition dec = decompose_control(
      Eigen::VectorXd::Zero(D), Eigen::MatrixXd::Identity(D, D));
  (void)dec;
  const DiscreteRandomizedControl control = DiscreteRandomizedControl::constant(
      Eigen::VectorXd::Zero(D), Eigen::MatrixXd::Identity(D, D), "demo");
  const ScenarioSource source = make_scenario_source(
      spec.model, part, control, spec.x0, spec.y0, opt.seed);
  const DiscreteScenario scen = source(0);
  const Eigen::VectorXd z = scen.z_at(demo_steps);
  for (int d = 0; d < D; ++d)
    info("sample_brownian_T[" + std::to_string(d) + "]", z[d],
         "one sampled Brownian coordinate at the horizon");
  for (int d = 0; d < D; ++d)
    info("sample_jump_T[" + std::to_string(d) + "]", z[D + D * D + d],
         "one sampled compensated jump coordinate at the horizon");
  info("sample_state_T", scen.Y(demo_steps, 0),
       "first coordinate of the sampled state path at the horizon");
  info("sample_wealth_T", scen.X[demo_steps],
       "sampled randomized-control wealth at the horizon");

  SimConfig cfg;
  cfg.steps = demo_steps;
  cfg.paths = 1;
  cfg.seed = opt.seed;
  const GaussianFeedbackLaw law = optimal_law(ab_w, spec.model);
  const CostEstimate one =
      simulate_exploratory(spec.model, law, spec.x0, spec.y0, cfg, what,
                           spec.lambda);
  info("sample_exploratory_wealth_T", one.terminal_mean,
       "one exploratory wealth path at the horizon under the optimal law");
}

int run(const CliOptions& opt) {
  std::ifstream in(opt.config_path);
  if (!in) {
    std::cerr << "error: cannot open config " << opt.config_path << "\n";
    return 2;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json j;
  if (opt.config_path.size() > 5 &&
      opt.config_path.substr(opt.config_path.size() - 5) == ".toml") {
    j = toml_to_json(text);
  } else if (opt.config_path.size() > 5 &&
             opt.config_path.substr(opt.config_path.size() - 5) == ".json") {
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
      throw std::invalid_argument(std::string("config: JSON parse error: ") +
                                  err.what());
    }
  } else {
    throw std::invalid_argument(
        "config: unsupported file extension (want .toml or .json): " +
        opt.config_path);
  }
  const ProblemSpec spec = parse_problem(j);

  ExperimentReport rep;
  rep.experiment = opt.experiment;
  rep.config_digest = fnv1a_digest(canonical_dump(j));
  rep.seed = opt.seed;

  const auto start = std::chrono::steady_clock::now();
  if (opt.experiment == "converge") run_converge(spec, opt, rep);
  else if (opt.experiment == "value-check") run_value_check(spec, opt, rep);
  else if (opt.experiment == "lagrange") run_lagrange(spec, opt, rep);
  else if (opt.experiment == "hjb") run_hjb(spec, opt, rep);
  else if (opt.experiment == "demo-sample-state") run_demo(spec, opt, rep);
  rep.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  for (const CheckRow& row : rep.rows) {
    std::printf("[%s] %s: estimate=%.10g", row.pass ? "PASS" : "FAIL",
                row.name.c_str(), row.estimate);
    if (!row.exact) std::printf(" (se=%.3g)", row.se);
    std::printf(" target=%.10g tol=%.3g", row.target, row.tolerance);
    if (!row.note.empty()) std::printf("  # %s", row.note.c_str());
    std::printf("\n");
  }

  std::string out_dir = opt.out_dir;
  if (const char* env = std::getenv("JUMPEX_OUT_DIR"); env && *env)
    out_dir = env;
  const bool want_json = opt.want_json || !opt.want_csv;
  const std::string basename =
      write_report_files(rep, out_dir, want_json, opt.want_csv);
  std::printf("report written under %s/%s.{%s}\n", out_dir.c_str(),
              basename.c_str(),
              want_json && opt.want_csv ? "json,csv" : (opt.want_csv ? "csv" : "json"));

  if (rep.all_pass()) {
    std::printf("ALL CHECKS PASSED (%zu rows, %.2fs)\n", rep.rows.size(),
                rep.wall_clock_seconds);
    return 0;
  }
  std::size_t failures = 0;
  for (const CheckRow& row : rep.rows) failures += row.pass ? 0 : 1;
  std::printf("%zu/%zu CHECKS FAILED (%.2fs)\n", failures, rep.rows.size(),
              rep.wall_clock_seconds);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Numerical laboratory for entropy-regularized mean-variance control "
      "with jump-diffusion dynamics"};
  CliOptions opt;
  std::string experiment_help = "experiment to run: ";
  for (size_t i = 0; i < kExperiments.size(); ++i)
    experiment_help += (i ? ", " : "") + kExperiments[i];
  app.add_option("experiment", opt.experiment, experiment_help)->required();
  app.add_option("--config", opt.config_path, "problem configuration (.json or .toml)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "master seed (default 1)");
  app.add_option("--paths", opt.paths, "Monte Carlo paths (default 20000)");
  app.add_option("--steps", opt.steps, "time steps per path (default 256)");
  app.add_option("--out", opt.out_dir,
                 "report directory (default ./reports; env JUMPEX_OUT_DIR overrides)");
  app.add_flag("--json", opt.want_json, "write a JSON report (default)");
  app.add_flag("--csv", opt.want_csv, "write a CSV report");
  CLI11_PARSE(app, argc, argv);

  bool known = false;
  for (const std::string& name : kExperiments) known = known || name == opt.experiment;
  if (!known) {
    std::cerr << "error: unknown experiment \"" << opt.experiment
              << "\"; valid experiments:";
    for (const std::string& name : kExperiments) std::cerr << " " << name;
    std::cerr << "\n";
    return 2;
  }
  try {
    return run(opt);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}
