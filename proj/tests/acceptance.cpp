// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "l1tik/cli.hpp"
#include "l1tik/experiments.hpp"
#include "l1tik/io.hpp"
#include "l1tik/noise.hpp"
#include "l1tik/operators.hpp"
#include "l1tik/solvers.hpp"
#include "l1tik/theory.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace l1tik;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

Outcome operator_order() {
  const auto error = [](Eigen::Index n) {
    const Grid grid(n);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const Signal f = Signal::sample(grid, [](double y) { return std::sin(std::numbers::pi * y); });
    const Signal g = Signal::sample(grid, [&](double x) { return std::sin(std::numbers::pi * x) / pi2; });
    return norm(apply(assemble(grid), f) - g, Norm::Linf);
  };
  const double ratio = error(64) / error(128);
  return {ratio >= 3.4 && ratio <= 4.6, fmt("err(64)/err(128) = %.4f", ratio)};
}

Outcome epsilon_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_int_distribution<int> numerator(-64, 64);
  int mismatches = 0;
  double worst_convexity = 0.0;
  double worst_monotone = 0.0;
  double worst_slope = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = size(rng);
    // Dyadic samples keep every partial sum exact, so equality is bitwise.
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = numerator(rng) / 8.0;
    const Grid grid(n);
    const EpsilonProfile profile = epsilon_profile(Signal(grid, v));
    const std::vector<double> brute = oracle::epsilon_by_subsets(v);
    for (int j = 0; j <= n; ++j) {
      if (profile.eps[j] != brute[j]) ++mismatches;
      if (j > 0) worst_monotone = std::max(worst_monotone, profile.eps[j] - profile.eps[j - 1]);
      if (j > 0 && j < n) {
        worst_convexity = std::max(worst_convexity,
                                   2 * profile.eps[j] - profile.eps[j - 1] - profile.eps[j + 1]);
      }
    }
    const double slope = (profile.eps[1] - profile.eps[0]) / grid.weight();
    worst_slope = std::max(worst_slope, std::abs(slope + v.cwiseAbs().maxCoeff()));
  }
  const bool pass = mismatches == 0 && worst_convexity <= 1e-12 && worst_monotone <= 1e-12 &&
                    worst_slope <= 1e-12;
  return {pass, fmt("mismatches = %.0f, convexity slack = %.2e, monotone slack = %.2e, "
                    "slope error = %.2e",
                    mismatches, worst_convexity, worst_monotone, worst_slope)};
}

Outcome pure_impulse_closed_form() {
  double worst_ratio = 0.0;
  // eta0 * n integral, so the carrier measure is exactly eta0.
  for (auto [n, eta0] : {std::pair{200, 0.05}, {100, 0.1}, {64, 0.25}, {40, 0.5}}) {
    for (double s : {1.0, 10.0}) {
      const Grid grid(n);
      const EpsilonProfile profile = epsilon_profile(gen_pure_impulse(grid, eta0, s, 7).xi);
      double worst = 0.0;
      for (int k = 0; k <= 1000; ++k) {
        const double eta = eta0 * k / 1000.0;
        worst = std::max(worst, std::abs(epsilon_at(profile, eta) - s * (1 - eta / eta0)));
      }
      worst_ratio = std::max(worst_ratio, worst / (s / n));
    }
  }
  return {worst_ratio <= 1.0, fmt("max deviation = %.3e of s/n", worst_ratio)};
}

Outcome dual_certification() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> size(8, 128);
  std::uniform_real_distribution<double> log_alpha(-4.0, 0.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst_gap = 0.0;
  double worst_weak = -std::numeric_limits<double>::infinity();
  int unconverged = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const Grid grid(size(rng));
    const KernelOperator op = assemble(grid);
    const TestProblem problem = make_test_problem(trial % 2 ? "sine_1" : "sine_2", grid);
    const Signal g = problem.g_dag_analytic +
                     gen_salt_pepper(grid, 0.05 + 0.3 * (unit(rng) + 1) / 2, 1.0, rng()).xi;
    SolveConfig cfg;
    cfg.alpha = std::pow(10.0, log_alpha(rng));
    const SolveResult r = solve_l1_dual(op, g, cfg);
    if (!r.converged) ++unconverged;
    worst_gap = std::max(worst_gap, *r.gap);
    worst_weak = std::max(worst_weak, dual_objective(op, g, *r.p) - r.primal_value);
    for (int probe = 0; probe < 20; ++probe) {
      const Signal p = Signal::sample(grid, [&](double) { return unit(rng) / cfg.alpha; });
      const Signal u = Signal::sample(grid, [&](double) { return 3 * unit(rng); });
      worst_weak = std::max(worst_weak, dual_objective(op, g, p) -
                                            primal_objective(op, g, cfg.alpha, u, Fidelity::L1));
    }
  }
  double worst_oracle = 0.0;
  const Grid small(8);
  const KernelOperator op8 = assemble(small);
  for (int trial = 0; trial < 5; ++trial) {
    const double alpha = std::pow(10.0, log_alpha(rng));
    const Signal g = Signal::sample(small, [&](double x) { return 0.1 * std::sin(4 * x) + 0.1 * unit(rng); });
    const Eigen::VectorXd u_star = op8.matrix().transpose() * oracle::box_qp(op8.gram(), g.values(), 1 / alpha);
    SolveConfig cfg;
    cfg.alpha = alpha;
    const SolveResult r = solve_l1_dual(op8, g, cfg);
    worst_oracle = std::max(worst_oracle, std::sqrt(weighted_sq_l2(r.u.values() - u_star)));
  }
  const bool pass = unconverged == 0 && worst_gap <= 1e-8 && worst_weak <= 1e-10 && worst_oracle <= 1e-4;
  return {pass, fmt("max gap = %.2e, max D-P = %.2e, n=8 oracle L2 = %.2e, unconverged = %.0f",
                    worst_gap, worst_weak, worst_oracle, unconverged)};
}

Outcome exact_penalization() {
  const Grid grid(200);
  const KernelOperator op = assemble(grid);
  const TestProblem problem = make_test_problem("benchmark_omega_one", grid);
  const Signal g = apply(op, problem.u_dag);
  double worst_small = 0.0;
  for (double alpha : {0.05, 0.2, 0.4}) {
    SolveConfig cfg;
    cfg.alpha = alpha;
    worst_small = std::max(worst_small, bregman_error(solve_l1_dual(op, g, cfg).u, problem.u_dag));
  }
  SolveConfig cfg;
  cfg.alpha = 5.0;
  const double above = bregman_error(solve_l1_dual(op, g, cfg).u, problem.u_dag);
  return {worst_small <= 1e-10 && above >= 1e-4,
          fmt("max error below threshold = %.2e, error at alpha=5 = %.3e", worst_small, above)};
}

Outcome scale_robustness() {
  const std::vector<ScaleRow> rows = scale_robustness_experiment(0.05, {1.0, 10.0, 100.0}, 17, 200);
  double lo = rows[0].l1_error;
  double hi = rows[0].l1_error;
  bool increasing = true;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    lo = std::min(lo, rows[k].l1_error);
    hi = std::max(hi, rows[k].l1_error);
    increasing = increasing && rows[k].l2_error > rows[k - 1].l2_error;
  }
  const double spread = hi / lo - 1.0;
  return {spread <= 0.15 && increasing,
          fmt("L1 errors %.3e..%.3e (spread %.1f%%), L2 errors ", lo, hi, 100 * spread) +
              fmt("%.3e < %.3e < %.3e", rows[0].l2_error, rows[1].l2_error, rows[2].l2_error)};
}

Outcome l1_beats_l2() {
  const Grid grid(200);
  const KernelOperator op = assemble(grid);
  const TestProblem problem = make_test_problem("sine_1", grid);
  const AlphaGrid alphas;
  double impulse[2] = {0, 0};
  double gauss[2] = {0, 0};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const NoiseRealization sp = gen_salt_pepper(grid, 0.05, 1.0, seed);
    Signal gn = gen_gaussian(grid, 1.0, seed).xi;
    gn = gn * (norm(sp.xi, Norm::L1) / norm(gn, Norm::L1));
    for (int f = 0; f < 2; ++f) {
      const Fidelity fidelity = f == 0 ? Fidelity::L1 : Fidelity::L2;
      impulse[f] += optimal_alpha_search(op, problem.g_dag_analytic + sp.xi, problem.u_dag, alphas,
                                         fidelity).bregman_error / 10;
      gauss[f] += optimal_alpha_search(op, problem.g_dag_analytic + gn, problem.u_dag, alphas,
                                       fidelity).bregman_error / 10;
    }
  }
  return {impulse[0] < 0.5 * impulse[1] && gauss[1] <= 1.2 * gauss[0],
          fmt("salt-pepper L1/L2 = %.3e/%.3e, gaussian L1/L2 = %.3e/%.3e", impulse[0], impulse[1],
              gauss[0], gauss[1])};
}

fs::path work_dir() { return fs::path(L1TIK_BINARY_DIR) / "acceptance_runs"; }

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome rate_slope() {
  const fs::path out = work_dir() / "default_a";
  fs::remove_all(out);
  std::ostringstream log;
  const int status = run_cli({"rates", "--out", out.string()}, log, log);
  if (status != 0) return {false, "rates command failed: " + log.str()};
  const KeyValues fit = read_key_values_file((out / "fit.txt").string());
  const auto get = [&](const std::string& key) {
    for (const auto& [k, v] : fit) {
      if (k == key) return std::stod(v);
    }
    return std::nan("");
  };
  const double kappa = get("kappa");
  const double breg = get("bregman_slope");
  const double res = get("residual_slope");
  const double breg_theory = kappa * 5.0 / (2.0 - kappa);
  const double res_theory = 5.0 / (2.0 - kappa);
  const bool pass = std::abs(breg - breg_theory) <= 0.25 * breg_theory &&
                    std::abs(res - res_theory) <= 0.25 * res_theory;
  return {pass, fmt("kappa_est = %.3f, bregman slope %.3f vs %.3f, residual slope %.3f", kappa, breg,
                    breg_theory, res) +
                    fmt(" vs %.3f", res_theory)};
}

Outcome fenchel_round_trip() {
  Eigen::VectorXd alpha(31);
  for (int k = 0; k < 31; ++k) alpha[k] = std::pow(10.0, -3.0 + 0.1 * k);
  double worst = 0.0;
  std::string detail;
  for (double kappa : {0.25, 0.5, 0.75}) {
    const Eigen::VectorXd samples = alpha.unaryExpr([&](double a) { return oracle::psi_power(1.0, kappa, a); });
    const double recovered = phi_from_psi(alpha, samples).kappa;
    worst = std::max(worst, std::abs(recovered - kappa) / kappa);
    detail += fmt("%.4f ", recovered);
  }
  return {worst <= 0.05, "recovered kappa " + detail + fmt("(max rel. error %.2f%%)", 100 * worst)};
}

Outcome determinism() {
  const fs::path first = work_dir() / "default_a";
  const fs::path second = work_dir() / "default_b";
  fs::remove_all(second);
  std::ostringstream log;
  // Second run starts from the snapshot written by the first.
  const int status = run_cli({"rates", "--config", (first / "config.txt").string(), "--out", second.string()}, log, log);
  if (status != 0) return {false, "rates command failed: " + log.str()};
  const bool trials = slurp(first / "trials.csv") == slurp(second / "trials.csv");
  const bool summary = slurp(first / "summary.csv") == slurp(second / "summary.csv");
  return {trials && summary && !slurp(first / "trials.csv").empty(),
          std::string("trials.csv ") + (trials ? "identical" : "differs") + ", summary.csv " +
              (summary ? "identical" : "differs")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {1, "operator quadrature order", 1, operator_order},
      {2, "epsilon profile vs subset oracle", 5, epsilon_oracle},
      {3, "pure-impulse closed form", 1, pure_impulse_closed_form},
      {4, "dual solver certification", 60, dual_certification},
      {5, "exact penalization", 10, exact_penalization},
      {6, "scale robustness", 120, scale_robustness},
      {7, "L1 vs L2 under impulsive and gaussian noise", 120, l1_beats_l2},
      {8, "rate slope on the default sweep", 600, rate_slope},
      {9, "Fenchel round trip", 5, fenchel_round_trip},
      {10, "determinism of the rates command", 600, determinism},
  };
  fs::create_directories(work_dir());
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_s;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d %s: %s; %s (%.2f s, budget %.0f s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                outcome.detail.c_str(), seconds, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
