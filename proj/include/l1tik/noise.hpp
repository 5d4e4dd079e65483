#pragma once

#include "l1tik/mesh.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace l1tik {

enum class NoiseKind { None, SaltPepper, PureImpulse, Gaussian };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view text);

struct NoiseParams {
  double eta0 = 0.0;
  double s = 0.0;
  double sigma = 0.0;
};

struct NoiseRealization {
  Signal xi;
  std::uint64_t seed = 0;
  NoiseKind kind = NoiseKind::None;
  NoiseParams params;
};

/// Number of corrupted cells, ceil(eta0 * n). A relative slack of 1e-12
/// absorbs round-off in products such as 0.7 * 10.
Eigen::Index impulse_count(const Grid& grid, double eta0);

/// Impulses of size s/eta0 with fair random signs on ceil(eta0 n) distinct
/// cells. Draw order: a partial Fisher-Yates shuffle picks the cells, then
/// one sign draw per picked cell in pick order.
NoiseRealization gen_salt_pepper(const Grid& grid, double eta0, double s, std::uint64_t seed);

/// Same carrier set as gen_salt_pepper for the same seed, all signs positive.
NoiseRealization gen_pure_impulse(const Grid& grid, double eta0, double s, std::uint64_t seed);

/// i.i.d. N(0, sigma^2) via Box-Muller pairs.
NoiseRealization gen_gaussian(const Grid& grid, double sigma, std::uint64_t seed);

NoiseRealization zero_noise(const Grid& grid);

/// Text record: `key=value` header lines followed by `values` and one sample
/// per line. Values are written with 17 significant digits.
void write_noise_record(std::ostream& out, const NoiseRealization& noise);
NoiseRealization read_noise_record(std::istream& in);

/// Piecewise-linear profile eta -> eps_xi(eta) on breakpoints j/n.
struct EpsilonProfile {
  Eigen::VectorXd eta;  // j / n, j = 0..n
  Eigen::VectorXd eps;  // off-set L1 mass after removing the j largest |xi_i|
};

EpsilonProfile epsilon_profile(const Signal& xi);
double epsilon_at(const EpsilonProfile& profile, double eta);

struct EtaBar {
  double eta = 0.0;
  /// Set when the profile vanishes identically.
  bool zero_noise = false;
};

/// Solves eps(eta) = eta^(gamma / (2 - kappa)) by bisection.
EtaBar eta_bar(const EpsilonProfile& profile, double gamma, double kappa);

/// (eps(0) / eps(eta_bar))^kappa, or +infinity if eps(eta_bar) = 0.
double improvement_factor(const EpsilonProfile& profile, double eta_bar, double kappa);

}  // namespace l1tik
