#include "l1tik/theory.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

namespace l1tik {

PowerIndex make_power_index(double c, double kappa) {
  if (!(c > 0.0)) throw std::invalid_argument("index coefficient c must be positive");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
  return {c, kappa};
}

SampledIndex make_sampled_index(const Eigen::VectorXd& t, const Eigen::VectorXd& phi) {
  if (t.size() != phi.size() || t.size() < 1) {
    throw std::invalid_argument("sampled index: need matching nonempty arrays");
  }
  std::vector<double> ts;
  std::vector<double> ps;
  if (t[0] > 0.0) {
    ts.push_back(0.0);
    ps.push_back(0.0);
  } else if (t[0] < 0.0) {
    throw std::invalid_argument("sampled index: negative abscissa");
  }
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    if (!std::isfinite(t[k]) || !std::isfinite(phi[k])) {
      throw std::invalid_argument("sampled index: non-finite sample");
    }
    if (!ts.empty() && t[k] <= ts.back()) {
      throw std::invalid_argument("sampled index: abscissae must increase");
    }
    ts.push_back(t[k]);
    ps.push_back(phi[k]);
  }
  const bool origin_moved = ps.front() != 0.0;
  ps.front() = 0.0;

  // Pool adjacent violators on the slopes, weighted by interval length, so
  // that the result is the closest (in weighted L2) nonincreasing sequence.
  struct Block {
    double slope;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double h = ts[k] - ts[k - 1];
    blocks.push_back({(ps[k] - ps[k - 1]) / h, h, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].slope < blocks.back().slope) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& below = blocks.back();
      const double w = below.weight + top.weight;
      below.slope = (below.slope * below.weight + top.slope * top.weight) / w;
      below.weight = w;
      below.count += top.count;
    }
  }

  SampledIndex out;
  out.t = Eigen::Map<const Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
  out.phi.resize(out.t.size());
  out.phi[0] = 0.0;
  std::size_t k = 1;
  for (const Block& b : blocks) {
    const double slope = std::max(0.0, b.slope);
    for (std::size_t j = 0; j < b.count; ++j, ++k) {
      out.phi[k] = out.phi[k - 1] + slope * (ts[k] - ts[k - 1]);
    }
  }
  double max_change = 0.0;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    max_change = std::max(max_change, std::abs(out.phi[j] - ps[j]));
  }
  const double scale = std::max(1.0, out.phi.cwiseAbs().maxCoeff());
  out.adjusted = origin_moved || max_change > 1e-12 * scale;
  if (out.adjusted) {
    std::cerr << "warning: sampled index function projected onto concave nondecreasing "
                 "functions (max change "
              << max_change << ")\n";
  }
  return out;
}

double evaluate(const IndexFunction& phi, double t) {
  if (t < 0.0) throw std::invalid_argument("index function evaluated at negative t");
  if (const auto* pw = std::get_if<PowerIndex>(&phi)) return pw->c * std::pow(t, pw->kappa);
  const auto& s = std::get<SampledIndex>(phi);
  const Eigen::Index n = s.t.size();
  if (n == 1) return 0.0;
  if (t >= s.t[n - 1]) {
    // Continue with the last slope.
    const double slope = (s.phi[n - 1] - s.phi[n - 2]) / (s.t[n - 1] - s.t[n - 2]);
    return s.phi[n - 1] + slope * (t - s.t[n - 1]);
  }
  const auto it = std::upper_bound(s.t.data(), s.t.data() + n, t);
  const Eigen::Index k = it - s.t.data();
  const double lam = (t - s.t[k - 1]) / (s.t[k] - s.t[k - 1]);
  return (1.0 - lam) * s.phi[k - 1] + lam * s.phi[k];
}

double psi_power_constant(double c, double kappa) {
  const double e = 1.0 / (1.0 - kappa);
  return c * std::pow(kappa * c, kappa * e) - std::pow(kappa * c, e);
}

namespace {

void check_positive_alpha(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
}

}  // namespace

double psi(const IndexFunction& phi, double alpha) {
  check_positive_alpha(alpha);
  if (const auto* pw = std::get_if<PowerIndex>(&phi)) {
    if (pw->kappa >= 1.0) return alpha <= 1.0 / pw->c ? 0.0 : kInfinity;
    return psi_power_constant(pw->c, pw->kappa) *
           std::pow(alpha, pw->kappa / (1.0 - pw->kappa));
  }
  const auto& s = std::get<SampledIndex>(phi);
  return fenchel_conjugate_numeric(s.t, s.phi, -1.0 / alpha);
}

double theta(const IndexFunction& phi, double alpha) {
  const double v = psi(phi, alpha);
  return v == 0.0 ? 0.0 : alpha * v;
}

double theta_tilde(const IndexFunction& phi, double alpha, double q_prime) {
  const double v = psi(phi, alpha);
  return v == 0.0 ? 0.0 : std::pow(alpha, q_prime) * v;
}

double invert_monotone(const std::function<double(double)>& f, double y, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("invert_monotone: empty bracket");
  const double flo = f(lo);
  const double fhi = f(hi);
  // Relative, so that tiny targets such as eta^gamma are still resolved.
  const double tol = 1e-12 * std::abs(y);
  if (y < flo - tol || y > fhi + tol) {
    throw std::invalid_argument("invert_monotone: target outside the range of f on the bracket");
  }
  if (std::abs(flo - y) <= tol) return lo;
  if (std::abs(fhi - y) <= tol) return hi;
  for (int it = 0; it < 2200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;
    const double fm = f(mid);
    if (std::abs(fm - y) <= tol) return mid;
    if (fm < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double apriori_alpha_power(double c, double kappa, double r, double c_err, double errbound) {
  if (!(c > 0.0 && r > 0.0 && c_err > 0.0 && errbound > 0.0)) {
    throw std::invalid_argument("apriori_alpha_power: arguments must be positive");
  }
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
  return std::pow(errbound, 1.0 - kappa) /
         (c * kappa * std::pow(r, kappa) * std::pow(c_err, kappa));
}

namespace {

// Inverse of a nondecreasing function that vanishes at 0, growing the
// bracket until it covers y.
double invert_from_zero(const std::function<double(double)>& f, double y) {
  if (y <= 0.0) return 0.0;
  double hi = 1.0;
  for (int k = 0; k < 2000 && f(hi) < y; ++k) hi *= 2.0;
  if (!(f(hi) >= y)) throw std::invalid_argument("value outside the range of the function");
  return invert_monotone(f, y, 0.0, hi);
}

}  // namespace

double alpha_choice_case1(const IndexFunction& phi, double q_prime, double epsilon, double eta,
                          double gamma) {
  if (const auto* pw = std::get_if<PowerIndex>(&phi); pw && pw->kappa >= 1.0) {
    throw std::invalid_argument("alpha_choice_case1 needs kappa < 1; use the linear-index rule");
  }
  if (epsilon < 0.0 || eta < 0.0) throw std::invalid_argument("noise levels must be nonnegative");
  if (epsilon == 0.0 && eta == 0.0) {
    throw std::invalid_argument("alpha_choice_case1: noise-free data has no finite choice");
  }
  // theta(0) = theta_tilde(0) = 0 by continuity.
  const auto th = [&](double a) { return a <= 0.0 ? 0.0 : theta(phi, a); };
  const auto tt = [&](double a) { return a <= 0.0 ? 0.0 : theta_tilde(phi, a, q_prime); };
  return invert_from_zero(th, epsilon) + invert_from_zero(tt, std::pow(eta, gamma));
}

double gamma_exponent(double k, double p, double d, double q_prime) {
  if (!(d >= 1.0)) throw std::invalid_argument("dimension must be at least 1");
  if (!(p >= 1.0)) throw std::invalid_argument("integrability p must be at least 1");
  if (!(q_prime > 1.0)) throw std::invalid_argument("q' must exceed 1");
  if (k < 0.0) throw std::invalid_argument("Sobolev order must be nonnegative");
  const bool p_inf = std::isinf(p);
  const bool admissible = (k == 0.0 && p_inf) || k > (p_inf ? 0.0 : d / p);
  if (!admissible) {
    throw std::invalid_argument("need k > d/p, or k = 0 with p = infinity");
  }
  const double tail = p_inf ? 1.0 : (p - 1.0) / p;
  return q_prime * (k / d + tail);
}

RateParams make_rate_params(double k, double p, double d, double q_prime, double beta,
                            double c_err, double c_psi) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(c_err >= 1.0)) throw std::invalid_argument("C_err must be at least 1");
  if (!(c_psi > 0.0)) throw std::invalid_argument("C_psi must be positive");
  return {k, p, d, q_prime, beta, c_err, c_psi, 1.0, gamma_exponent(k, p, d, q_prime)};
}

double bound_bregman(const RateParams& params, const IndexFunction& phi, double epsilon,
                     double eta, double alpha) {
  check_positive_alpha(alpha);
  const double qp = params.q_prime;
  const double approx = psi(phi, params.c_err * alpha);
  double total = 2.0 * qp * epsilon / alpha +
                 (qp - 1.0) * std::pow(eta, params.gamma) / std::pow(alpha, qp);
  if (approx != 0.0) total += params.c_psi * approx;
  return total / params.beta;
}

double bound_residual(const RateParams& params, const IndexFunction& phi, double epsilon,
                      double eta, double alpha) {
  check_positive_alpha(alpha);
  const double qp = params.q_prime;
  const double approx = psi(phi, 2.0 * params.c_err * alpha);
  double total = 4.0 * qp * epsilon +
                 2.0 * (qp - 1.0) * std::pow(eta, params.gamma) / std::pow(alpha, qp - 1.0);
  if (approx != 0.0) total += 2.0 * params.c_psi * params.c_err * alpha * approx;
  return total;
}

RateExponents rate_exponents_power(double kappa, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (kappa >= 1.0) {
    throw std::invalid_argument("kappa = 1 is the linear-index case with rates O(eps + eta^gamma)");
  }
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must lie in (0, 1)");
  const double res_eta = gamma / (2.0 - kappa);
  return {kappa, kappa * res_eta, 1.0, res_eta};
}

RateExponents rate_exponents(double kappa, double gamma) {
  if (kappa >= 1.0) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    return {1.0, gamma, 1.0, gamma};
  }
  return rate_exponents_power(kappa, gamma);
}

Table1Row table1_comparison(double s, double eta0, double kappa, double kappa_tilde,
                            double gamma) {
  if (!(s > 0.0 && eta0 > 0.0 && gamma > 0.0)) {
    throw std::invalid_argument("table1_comparison: s, eta0, gamma must be positive");
  }
  if (!(kappa > 0.0 && kappa < 1.0 && kappa_tilde > 0.0 && kappa_tilde < 1.0)) {
    throw std::invalid_argument("table1_comparison: exponents must lie in (0, 1)");
  }
  Table1Row row;
  row.l2_breg = std::pow(s, 2.0 * kappa_tilde) / std::pow(eta0, kappa_tilde);
  row.l1_std_breg = std::pow(s, kappa);
  row.l1_new_breg = std::min(std::pow(eta0, kappa * gamma / (2.0 - kappa)), std::pow(s, kappa));
  row.l2_res = s / std::sqrt(eta0);
  row.l1_std_res = s;
  row.l1_new_res = std::min(std::pow(eta0, gamma / (2.0 - kappa)), s);
  return row;
}

double fenchel_conjugate_numeric(const Eigen::VectorXd& t, const Eigen::VectorXd& phi, double s) {
  if (!(s < 0.0)) throw std::invalid_argument("conjugate of -phi is infinite for s >= 0");
  if (t.size() != phi.size() || t.size() == 0) {
    throw std::invalid_argument("fenchel_conjugate_numeric: bad samples");
  }
  return (s * t + phi).maxCoeff();
}

namespace {

struct PowerFit {
  double c;
  double kappa;
  double residual;
};

PowerFit fit_power_law(const Eigen::VectorXd& t, const Eigen::VectorXd& phi) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    if (t[k] > 0.0 && phi[k] > 0.0) {
      xs.push_back(std::log(t[k]));
      ys.push_back(std::log(phi[k]));
    }
  }
  if (xs.size() < 2) throw std::invalid_argument("power fit needs two positive samples");
  const auto m = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd design(m, 2);
  design.col(0).setOnes();
  design.col(1) = Eigen::Map<const Eigen::VectorXd>(xs.data(), m);
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(ys.data(), m);
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  const double rms = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(m));
  return {std::exp(coef[0]), coef[1], rms};
}

constexpr double kVanishing = 1e-14;

}  // namespace

PhiEstimate phi_from_psi(const Eigen::VectorXd& alpha, const Eigen::VectorXd& psi_values,
                         const Eigen::VectorXd& t_grid) {
  if (alpha.size() != psi_values.size()) throw std::invalid_argument("phi_from_psi: size mismatch");
  if (alpha.size() < 3) throw std::invalid_argument("phi_from_psi: need at least 3 samples");
  if ((alpha.array() <= 0.0).any() || (psi_values.array() < 0.0).any()) {
    throw std::invalid_argument("phi_from_psi: samples must be positive");
  }
  PhiEstimate est;
  est.t = t_grid;
  est.phi = Eigen::VectorXd::Zero(t_grid.size());

  const double top = psi_values.maxCoeff();
  if (top == 0.0) {
    est.linear = true;
    est.kappa = 1.0;
    est.c = 0.0;
    return est;
  }

  Eigen::VectorXd cleaned = psi_values;
  double largest_zero_alpha = 0.0;
  for (Eigen::Index k = 0; k < cleaned.size(); ++k) {
    if (cleaned[k] <= kVanishing * top) {
      cleaned[k] = 0.0;
      largest_zero_alpha = std::max(largest_zero_alpha, alpha[k]);
    }
  }
  for (Eigen::Index j = 0; j < t_grid.size(); ++j) {
    est.phi[j] = (cleaned.array() + t_grid[j] / alpha.array()).minCoeff();
  }

  if (largest_zero_alpha > 0.0) {
    est.linear = true;
    est.kappa = 1.0;
    est.c = 1.0 / largest_zero_alpha;
    // Residual of the linear bound against the envelope in log space.
    double ss = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < t_grid.size(); ++j) {
      if (t_grid[j] > 0.0 && est.phi[j] > 0.0) {
        const double d = std::log(est.phi[j]) - std::log(est.c * t_grid[j]);
        ss += d * d;
        ++count;
      }
    }
    est.residual = count > 0 ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
    return est;
  }

  const PowerFit fit = fit_power_law(est.t, est.phi);
  est.c = fit.c;
  est.kappa = fit.kappa;
  est.residual = fit.residual;
  return est;
}

PhiEstimate phi_from_psi(const Eigen::VectorXd& alpha, const Eigen::VectorXd& psi_values) {
  if (alpha.size() != psi_values.size()) throw std::invalid_argument("phi_from_psi: size mismatch");
  if (alpha.size() < 3) throw std::invalid_argument("phi_from_psi: need at least 3 samples");
  // Envelope kinks sit where lines of neighbouring alphas cross.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(alpha.size()));
  for (Eigen::Index k = 0; k < alpha.size(); ++k) order[static_cast<std::size_t>(k)] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return alpha[a] < alpha[b]; });
  double lo = kInfinity;
  double hi = 0.0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const Eigen::Index i = order[k];
    const Eigen::Index j = order[k + 1];
    const double dslope = 1.0 / alpha[i] - 1.0 / alpha[j];
    const double t = (psi_values[j] - psi_values[i]) / dslope;
    if (t > 0.0 && std::isfinite(t)) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  Eigen::VectorXd grid;
  if (hi > lo) {
    grid = Eigen::VectorXd::LinSpaced(60, std::log10(lo), std::log10(hi));
    grid = grid.unaryExpr([](double e) { return std::pow(10.0, e); });
  } else {
    // No usable kinks (e.g. psi identically zero): fall back to alpha-scale t.
    const double amax = alpha.maxCoeff();
    grid = Eigen::VectorXd::LinSpaced(60, -6.0, 0.0);
    grid = grid.unaryExpr([amax](double e) { return amax * std::pow(10.0, e); });
  }
  return phi_from_psi(alpha, psi_values, grid);
}

}  // namespace l1tik
