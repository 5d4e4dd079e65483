#pragma once

#include "l1tik/mesh.hpp"
#include "l1tik/operators.hpp"
#include "l1tik/solvers.hpp"
#include "l1tik/theory.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace l1tik {

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// count log-spaced values from min to max inclusive.
struct AlphaGrid {
  double min = 1e-6;
  double max = 1.0;
  int count = 49;

  Eigen::VectorXd values() const;
};

enum class FidelityChoice { L1, L2, Both };

std::string to_string(FidelityChoice choice);
FidelityChoice parse_fidelity_choice(std::string_view text);

struct ExperimentConfig {
  std::string problem = "sine_1";
  Eigen::Index n = 200;
  double eta0_base = 0.8;
  int i_min = 1;
  int i_max = 12;
  int trials = 10;
  double s = 1.0;
  FidelityChoice fidelity = FidelityChoice::L1;
  AlphaGrid alpha_grid;
  std::uint64_t master_seed = 1;
  /// Index-function exponent for the theoretical rate; estimated from the
  /// problem with estimate_phi when absent.
  std::optional<double> kappa;
  AlphaGrid phi_alpha_grid{1e-4, 10.0, 31};
  double gamma = 5.0;
  double gap_tol = 1e-8;
};

/// Throws std::invalid_argument on an inconsistent config.
void validate(const ExperimentConfig& cfg);

struct AlphaSearchResult {
  double alpha_opt = 0.0;
  double bregman_error = 0.0;
  SolveResult best;
  /// bregman_error per grid alpha, in grid order; NaN for failed solves.
  Eigen::VectorXd errors;
};

/// Errors within this absolute distance of the running minimum count as ties
/// and resolve toward the larger alpha.
inline constexpr double kAlphaTieTolerance = 1e-20;

/// Solves for every grid alpha (largest first, warm-starting the L1 dual
/// from the previous solution) and returns the alpha minimizing the Bregman
/// error to u_dag.
AlphaSearchResult optimal_alpha_search(const KernelOperator& op, const Signal& g_obs,
                                       const Signal& u_dag, const AlphaGrid& grid,
                                       Fidelity fidelity, double gap_tol = 1e-8);

struct TrialRecord {
  double eta0 = 0.0;
  int level = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double alpha_opt = 0.0;
  double bregman_error = 0.0;
  double l1_residual = 0.0;
  double l2_error = 0.0;
  std::optional<double> gap;
  bool converged = false;
};

struct LevelSummary {
  double eta0 = 0.0;
  double mean_bregman = 0.0;
  double sd_bregman = 0.0;
  double mean_residual = 0.0;
  double sd_residual = 0.0;
  /// Fitted constant times eta0^(theoretical Bregman exponent).
  double bound_value = 0.0;
  bool in_fit = false;
};

struct SlopeFit {
  double slope = 0.0;
  /// Two standard errors of the slope.
  double half_width = 0.0;
  double theory = 0.0;
  /// exp(mean(log e - theory log eta0)) over the fitted levels.
  double constant = 0.0;
  int points = 0;
};

struct RateSummary {
  Fidelity fidelity = Fidelity::L1;
  std::vector<LevelSummary> levels;
  SlopeFit bregman;
  SlopeFit residual;
  double kappa = 1.0;
  bool kappa_estimated = false;
  double gamma = 5.0;
  double noise_free_bregman = 0.0;
  double noise_free_residual = 0.0;
};

struct RateExperiment {
  std::vector<TrialRecord> records;
  RateSummary summary;
};

struct PhiFit {
  Eigen::VectorXd alpha;
  Eigen::VectorXd approx_error;
  PhiEstimate estimate;
};

/// Approximation error of the L1 method on discrete exact data T_n u_dag for
/// each alpha, then the concave-envelope power fit.
PhiFit estimate_phi(const KernelOperator& op, const TestProblem& problem,
                    const Eigen::VectorXd& alpha_samples);

/// Per-level means, standard deviations and log-log slopes. Levels whose mean
/// error is below twice the noise-free error are left out of the fit.
RateSummary summarize(const std::vector<TrialRecord>& records, Fidelity fidelity, double kappa,
                      double gamma, double noise_free_bregman, double noise_free_residual);

/// One entry per fidelity (L1 first when both are requested).
std::vector<RateExperiment> run_rate_experiment(const ExperimentConfig& cfg);

struct ScaleRow {
  double s = 0.0;
  double l1_error = 0.0;
  double l1_alpha = 0.0;
  double l2_error = 0.0;
  double l2_alpha = 0.0;
};

/// Purely impulsive noise with a fixed carrier set (same seed) and amplitude
/// s for each entry of s_list; s = 0 gives the noise-free baseline.
std::vector<ScaleRow> scale_robustness_experiment(double eta0, const std::vector<double>& s_list,
                                                  std::uint64_t seed, Eigen::Index n,
                                                  const std::string& problem = "sine_1",
                                                  const AlphaGrid& grid = {});

}  // namespace l1tik
