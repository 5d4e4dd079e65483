#include "l1tik/experiments.hpp"

#include "l1tik/noise.hpp"
#include "l1tik/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace l1tik {

Eigen::VectorXd AlphaGrid::values() const {
  if (count == 1) return Eigen::VectorXd::Constant(1, max);
  Eigen::VectorXd v(count);
  const double lo = std::log10(min);
  const double hi = std::log10(max);
  for (int k = 0; k < count; ++k) {
    v[k] = std::pow(10.0, lo + (hi - lo) * k / (count - 1));
  }
  v[0] = min;
  v[count - 1] = max;
  return v;
}

std::string to_string(FidelityChoice choice) {
  switch (choice) {
    case FidelityChoice::L1:
      return "l1";
    case FidelityChoice::L2:
      return "l2";
    case FidelityChoice::Both:
      return "both";
  }
  return "l1";
}

FidelityChoice parse_fidelity_choice(std::string_view text) {
  if (text == "both") return FidelityChoice::Both;
  return parse_fidelity(text) == Fidelity::L1 ? FidelityChoice::L1 : FidelityChoice::L2;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (cfg.n < 1) throw std::invalid_argument("n must be positive");
  if (!(cfg.eta0_base > 0.0 && cfg.eta0_base < 1.0)) {
    throw std::invalid_argument("eta0_base must lie in (0, 1)");
  }
  if (cfg.i_min < 0 || cfg.i_max < cfg.i_min) throw std::invalid_argument("bad i range");
  if (!(cfg.s > 0.0)) throw std::invalid_argument("s must be positive");
  for (const AlphaGrid* g : {&cfg.alpha_grid, &cfg.phi_alpha_grid}) {
    if (g->count < 10) throw std::invalid_argument("alpha grids need at least 10 points");
    if (!(g->min > 0.0 && g->max > g->min)) throw std::invalid_argument("bad alpha grid bounds");
  }
  if (cfg.kappa && !(*cfg.kappa > 0.0 && *cfg.kappa <= 1.0)) {
    throw std::invalid_argument("kappa must lie in (0, 1]");
  }
  if (!(cfg.gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(cfg.gap_tol > 0.0)) throw std::invalid_argument("gap_tol must be positive");
}

AlphaSearchResult optimal_alpha_search(const KernelOperator& op, const Signal& g_obs,
                                       const Signal& u_dag, const AlphaGrid& grid,
                                       Fidelity fidelity, double gap_tol) {
  if (grid.count < 1 || !(grid.min > 0.0) || grid.max < grid.min) {
    throw std::invalid_argument("invalid alpha grid");
  }
  const Eigen::VectorXd alphas = grid.values();
  AlphaSearchResult out{0.0, std::numeric_limits<double>::infinity(), SolveResult{u_dag, {}, 0.0, {}, {}, 0, false}, {}};
  out.errors = Eigen::VectorXd::Constant(alphas.size(), std::numeric_limits<double>::quiet_NaN());
  bool found = false;

  std::optional<Signal> warm;
  double warm_alpha = 0.0;
  for (Eigen::Index k = alphas.size() - 1; k >= 0; --k) {
    const double alpha = alphas[k];
    SolveConfig cfg;
    cfg.alpha = alpha;
    cfg.gap_tol = gap_tol;
    cfg.fidelity = fidelity;
    try {
      SolveResult r = [&] {
        if (fidelity == Fidelity::L2) return solve_l2(op, g_obs, alpha);
        // Scale so that coordinates at the old bound sit at the new one.
        std::optional<Signal> start;
        if (warm) start = *warm * (warm_alpha / alpha);
        return solve_l1_dual(op, g_obs, cfg, start);
      }();
      const double e = bregman_error(r.u, u_dag);
      if (!std::isfinite(e)) continue;
      out.errors[k] = e;
      if (r.p) {
        warm = r.p;
        warm_alpha = alpha;
      }
      if (!found || e < out.bregman_error - kAlphaTieTolerance) {
        found = true;
        out.alpha_opt = alpha;
        out.bregman_error = e;
        out.best = std::move(r);
      }
    } catch (const std::exception&) {
      // Recorded as NaN in errors.
    }
  }
  if (!found) throw ExperimentError("optimal_alpha_search: every solve failed");
  return out;
}

PhiFit estimate_phi(const KernelOperator& op, const TestProblem& problem,
                    const Eigen::VectorXd& alpha_samples) {
  if (alpha_samples.size() < 10) throw std::invalid_argument("estimate_phi needs >= 10 alphas");
  if ((alpha_samples.array() <= 0.0).any()) throw std::invalid_argument("alphas must be positive");
  if (alpha_samples.maxCoeff() / alpha_samples.minCoeff() < 1e3 * (1.0 - 1e-12)) {
    throw std::invalid_argument("estimate_phi: alphas must span at least 3 decades");
  }
  // Discrete exact data, so that the error measures approximation only.
  const Signal g = apply(op, problem.u_dag);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(alpha_samples.size()));
  for (Eigen::Index k = 0; k < alpha_samples.size(); ++k) order[static_cast<std::size_t>(k)] = k;
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return alpha_samples[a] > alpha_samples[b]; });

  PhiFit fit;
  fit.alpha = alpha_samples;
  fit.approx_error.resize(alpha_samples.size());
  std::optional<Signal> warm;
  double warm_alpha = 0.0;
  for (const Eigen::Index k : order) {
    SolveConfig cfg;
    cfg.alpha = alpha_samples[k];
    cfg.gap_tol = 1e-12;
    std::optional<Signal> start;
    if (warm) start = *warm * (warm_alpha / cfg.alpha);
    const SolveResult r = solve_l1_dual(op, g, cfg, start);
    fit.approx_error[k] = bregman_error(r.u, problem.u_dag);
    warm = r.p;
    warm_alpha = cfg.alpha;
  }
  fit.estimate = phi_from_psi(fit.alpha, fit.approx_error);
  return fit;
}

namespace {

struct LineFit {
  double slope;
  double intercept;
  double se;
};

LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto m = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - intercept - slope * x[k];
    sse += r * r;
  }
  const double se = x.size() > 2 ? std::sqrt(sse / (m - 2.0) / sxx) : 0.0;
  return {slope, intercept, se};
}

SlopeFit fit_slope(const std::vector<LevelSummary>& levels, bool bregman, double floor,
                   double theory, std::vector<bool>* used) {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<bool> mask(levels.size(), false);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double e = bregman ? levels[k].mean_bregman : levels[k].mean_residual;
    if (e > 0.0 && e >= 2.0 * floor) {
      x.push_back(std::log(levels[k].eta0));
      y.push_back(std::log(e));
      mask[k] = true;
    }
  }
  if (x.size() < 2) {
    // Everything saturated: fall back to all positive levels.
    x.clear();
    y.clear();
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const double e = bregman ? levels[k].mean_bregman : levels[k].mean_residual;
      mask[k] = e > 0.0;
      if (mask[k]) {
        x.push_back(std::log(levels[k].eta0));
        y.push_back(std::log(e));
      }
    }
  }
  if (used) *used = mask;
  SlopeFit fit;
  fit.theory = theory;
  fit.points = static_cast<int>(x.size());
  if (x.size() < 2) {
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const LineFit line = least_squares_line(x, y);
  fit.slope = line.slope;
  fit.half_width = 2.0 * line.se;
  double offset = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) offset += y[k] - theory * x[k];
  fit.constant = std::exp(offset / static_cast<double>(x.size()));
  return fit;
}

}  // namespace

RateSummary summarize(const std::vector<TrialRecord>& records, Fidelity fidelity, double kappa,
                      double gamma, double noise_free_bregman, double noise_free_residual) {
  RateSummary summary;
  summary.fidelity = fidelity;
  summary.kappa = kappa;
  summary.gamma = gamma;
  summary.noise_free_bregman = noise_free_bregman;
  summary.noise_free_residual = noise_free_residual;

  std::vector<int> levels;
  for (const TrialRecord& r : records) {
    if (std::find(levels.begin(), levels.end(), r.level) == levels.end()) levels.push_back(r.level);
  }
  std::sort(levels.begin(), levels.end());
  for (const int level : levels) {
    LevelSummary row;
    std::vector<const TrialRecord*> rows;
    for (const TrialRecord& r : records) {
      if (r.level == level) rows.push_back(&r);
    }
    const auto m = static_cast<double>(rows.size());
    row.eta0 = rows.front()->eta0;
    for (const TrialRecord* r : rows) {
      row.mean_bregman += r->bregman_error;
      row.mean_residual += r->l1_residual;
    }
    row.mean_bregman /= m;
    row.mean_residual /= m;
    if (rows.size() > 1) {
      for (const TrialRecord* r : rows) {
        row.sd_bregman += (r->bregman_error - row.mean_bregman) * (r->bregman_error - row.mean_bregman);
        row.sd_residual += (r->l1_residual - row.mean_residual) * (r->l1_residual - row.mean_residual);
      }
      row.sd_bregman = std::sqrt(row.sd_bregman / (m - 1.0));
      row.sd_residual = std::sqrt(row.sd_residual / (m - 1.0));
    }
    summary.levels.push_back(row);
  }

  const RateExponents theory = rate_exponents(kappa, gamma);
  std::vector<bool> used;
  summary.bregman = fit_slope(summary.levels, true, noise_free_bregman, theory.breg_eta, &used);
  summary.residual = fit_slope(summary.levels, false, noise_free_residual, theory.res_eta, nullptr);
  for (std::size_t k = 0; k < summary.levels.size(); ++k) {
    LevelSummary& row = summary.levels[k];
    row.in_fit = used[k];
    row.bound_value = summary.bregman.constant * std::pow(row.eta0, theory.breg_eta);
  }
  return summary;
}

std::vector<RateExperiment> run_rate_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const Grid grid(cfg.n);
  const KernelOperator op = assemble(grid);
  const TestProblem problem = make_test_problem(cfg.problem, grid);

  double kappa = 1.0;
  bool estimated = false;
  if (cfg.kappa) {
    kappa = *cfg.kappa;
  } else {
    const PhiFit fit = estimate_phi(op, problem, cfg.phi_alpha_grid.values());
    kappa = std::clamp(fit.estimate.kappa, 1e-6, 1.0);
    estimated = true;
  }

  std::vector<Fidelity> fidelities;
  if (cfg.fidelity != FidelityChoice::L2) fidelities.push_back(Fidelity::L1);
  if (cfg.fidelity != FidelityChoice::L1) fidelities.push_back(Fidelity::L2);

  std::vector<RateExperiment> out;
  for (const Fidelity fidelity : fidelities) {
    const AlphaSearchResult clean = optimal_alpha_search(op, problem.g_dag_analytic, problem.u_dag,
                                                         cfg.alpha_grid, fidelity, cfg.gap_tol);
    const double clean_residual =
        norm(apply(op, clean.best.u) - problem.g_dag_analytic, Norm::L1);

    RateExperiment exp;
    for (int level = cfg.i_min; level <= cfg.i_max; ++level) {
      const double eta0 = std::pow(cfg.eta0_base, level);
      for (int trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t seed = split_seed(cfg.master_seed, static_cast<std::uint32_t>(level),
                                              static_cast<std::uint32_t>(trial));
        const NoiseRealization noise = gen_salt_pepper(grid, eta0, cfg.s, seed);
        const Signal g_obs = problem.g_dag_analytic + noise.xi;
        const AlphaSearchResult best = optimal_alpha_search(op, g_obs, problem.u_dag,
                                                            cfg.alpha_grid, fidelity, cfg.gap_tol);
        TrialRecord rec;
        rec.eta0 = eta0;
        rec.level = level;
        rec.trial = trial;
        rec.seed = seed;
        rec.alpha_opt = best.alpha_opt;
        rec.bregman_error = best.bregman_error;
        rec.l1_residual = norm(apply(op, best.best.u) - problem.g_dag_analytic, Norm::L1);
        rec.l2_error = norm(best.best.u - problem.u_dag, Norm::L2);
        rec.gap = best.best.gap;
        rec.converged = best.best.converged;
        exp.records.push_back(rec);
      }
    }
    exp.summary =
        summarize(exp.records, fidelity, kappa, cfg.gamma, clean.bregman_error, clean_residual);
    exp.summary.kappa_estimated = estimated;
    out.push_back(std::move(exp));
  }
  return out;
}

std::vector<ScaleRow> scale_robustness_experiment(double eta0, const std::vector<double>& s_list,
                                                  std::uint64_t seed, Eigen::Index n,
                                                  const std::string& problem_name,
                                                  const AlphaGrid& grid) {
  if (s_list.empty()) throw std::invalid_argument("s_list must not be empty");
  const Grid mesh(n);
  const KernelOperator op = assemble(mesh);
  const TestProblem problem = make_test_problem(problem_name, mesh);
  std::vector<ScaleRow> rows;
  for (const double s : s_list) {
    if (s < 0.0) throw std::invalid_argument("amplitudes must be nonnegative");
    const NoiseRealization noise =
        s > 0.0 ? gen_pure_impulse(mesh, eta0, s, seed) : zero_noise(mesh);
    const Signal g_obs = problem.g_dag_analytic + noise.xi;
    const AlphaSearchResult l1 =
        optimal_alpha_search(op, g_obs, problem.u_dag, grid, Fidelity::L1);
    const AlphaSearchResult l2 =
        optimal_alpha_search(op, g_obs, problem.u_dag, grid, Fidelity::L2);
    rows.push_back({s, l1.bregman_error, l1.alpha_opt, l2.bregman_error, l2.alpha_opt});
  }
  return rows;
}

}  // namespace l1tik
