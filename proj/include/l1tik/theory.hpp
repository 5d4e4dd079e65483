#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <variant>

namespace l1tik {

/// phi(t) = c t^kappa with c > 0 and 0 < kappa <= 1.
struct PowerIndex {
  double c = 1.0;
  double kappa = 0.5;
};

/// Piecewise-linear index function through (t_k, phi_k), t_0 = 0, phi_0 = 0.
struct SampledIndex {
  Eigen::VectorXd t;
  Eigen::VectorXd phi;
  /// Set when ingestion had to project the data onto concave nondecreasing
  /// functions.
  bool adjusted = false;
};

using IndexFunction = std::variant<PowerIndex, SampledIndex>;

PowerIndex make_power_index(double c, double kappa);

/// Validates abscissae, prepends the origin if needed and projects the slopes
/// onto nonincreasing nonnegative values (weighted pool-adjacent-violators).
SampledIndex make_sampled_index(const Eigen::VectorXd& t, const Eigen::VectorXd& phi);

double evaluate(const IndexFunction& phi, double t);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Approximation-error bound psi(alpha) = (-phi)^*(-1/alpha).
/// Power case with kappa < 1: C alpha^{kappa/(1-kappa)} with
/// C = c (kappa c)^{kappa/(1-kappa)} - (kappa c)^{1/(1-kappa)}.
/// kappa = 1: 0 for alpha <= 1/c, +infinity above.
double psi(const IndexFunction& phi, double alpha);
double theta(const IndexFunction& phi, double alpha);
double theta_tilde(const IndexFunction& phi, double alpha, double q_prime);

/// Constant C of the power-case closed form of psi.
double psi_power_constant(double c, double kappa);

/// Bisection for f(x) = y on [lo, hi] with f continuous and nondecreasing.
double invert_monotone(const std::function<double(double)>& f, double y, double lo, double hi);

/// A-priori choice alpha = errbound^{1-kappa} / (c kappa r^kappa C_err^kappa).
double apriori_alpha_power(double c, double kappa, double r, double c_err, double errbound);

/// alpha = theta^{-1}(eps) + theta_tilde^{-1}(eta^gamma).
double alpha_choice_case1(const IndexFunction& phi, double q_prime, double epsilon, double eta,
                          double gamma);

/// Exponent q'(k/d + (p-1)/p), with (p-1)/p = 1 for p = infinity.
double gamma_exponent(double k, double p, double d, double q_prime);

struct RateParams {
  double k = 2.0;
  double p = 2.0;
  double d = 1.0;
  double q_prime = 2.0;
  double beta = 1.0;
  double c_err = 1.0;
  double c_psi = 1.0;
  double r = 1.0;
  double gamma = 5.0;
};

/// Validates and fills gamma from (k, p, d, q').
RateParams make_rate_params(double k, double p, double d, double q_prime, double beta = 1.0,
                            double c_err = 1.0, double c_psi = 1.0);

/// [2q' eps/alpha + (q'-1) eta^gamma / alpha^q' + C_psi psi(C_err alpha)] / beta.
double bound_bregman(const RateParams& params, const IndexFunction& phi, double epsilon,
                     double eta, double alpha);

/// 4q' eps + 2(q'-1) eta^gamma / alpha^{q'-1} + 2 C_psi C_err alpha psi(2 C_err alpha).
double bound_residual(const RateParams& params, const IndexFunction& phi, double epsilon,
                      double eta, double alpha);

struct RateExponents {
  double breg_eps = 0.0;
  double breg_eta = 0.0;
  double res_eps = 0.0;
  double res_eta = 0.0;
};

/// Hoelder rates for phi = c t^kappa, kappa in (0, 1):
/// (kappa, kappa gamma/(2-kappa), 1, gamma/(2-kappa)).
RateExponents rate_exponents_power(double kappa, double gamma);

/// Like rate_exponents_power but kappa = 1 maps to the linear-index rates
/// O(eps + eta^gamma) for both error measures.
RateExponents rate_exponents(double kappa, double gamma);

struct Table1Row {
  double l2_breg = 0.0;
  double l1_std_breg = 0.0;
  double l1_new_breg = 0.0;
  double l2_res = 0.0;
  double l1_std_res = 0.0;
  double l1_new_res = 0.0;
};

/// Bound magnitudes (without constants) for purely impulsive noise of
/// amplitude s on a set of measure eta0.
Table1Row table1_comparison(double s, double eta0, double kappa, double kappa_tilde,
                            double gamma);

/// max_k (s t_k + phi_k) for s < 0.
double fenchel_conjugate_numeric(const Eigen::VectorXd& t, const Eigen::VectorXd& phi, double s);

struct PhiEstimate {
  Eigen::VectorXd t;
  Eigen::VectorXd phi;
  double c = 0.0;
  double kappa = 1.0;
  /// RMS residual of the log-log fit.
  double residual = 0.0;
  /// Some psi sample vanishes, so phi is bounded by a linear function and
  /// kappa is reported as 1 with c = 1 / (largest alpha with psi = 0).
  bool linear = false;
};

/// Concave envelope phi(t) = min_k (psi_k + t / alpha_k) on t_grid followed by
/// a least-squares fit of log phi against log t.
PhiEstimate phi_from_psi(const Eigen::VectorXd& alpha, const Eigen::VectorXd& psi_values,
                         const Eigen::VectorXd& t_grid);

/// Same, on a log-spaced grid spanning the kinks of the envelope.
PhiEstimate phi_from_psi(const Eigen::VectorXd& alpha, const Eigen::VectorXd& psi_values);

}  // namespace l1tik
