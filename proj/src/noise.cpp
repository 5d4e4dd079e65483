#include "l1tik/noise.hpp"

#include "l1tik/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace l1tik {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None:
      return "none";
    case NoiseKind::SaltPepper:
      return "salt_pepper";
    case NoiseKind::PureImpulse:
      return "pure_impulse";
    case NoiseKind::Gaussian:
      return "gaussian";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view text) {
  if (text == "none") return NoiseKind::None;
  if (text == "salt_pepper" || text == "salt-pepper") return NoiseKind::SaltPepper;
  if (text == "pure_impulse" || text == "pure") return NoiseKind::PureImpulse;
  if (text == "gaussian") return NoiseKind::Gaussian;
  throw std::invalid_argument("unknown noise kind '" + std::string(text) + "'");
}

Eigen::Index impulse_count(const Grid& grid, double eta0) {
  const double target = eta0 * static_cast<double>(grid.size());
  const auto m = static_cast<Eigen::Index>(std::ceil(target * (1.0 - 1e-12)));
  return std::clamp<Eigen::Index>(m, 1, grid.size());
}

namespace {

void check_impulse_params(double eta0, double s) {
  if (!(eta0 > 0.0 && eta0 <= 1.0)) {
    throw std::invalid_argument("eta0 must lie in (0, 1]");
  }
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("s must be positive");
}

NoiseRealization impulses(const Grid& grid, double eta0, double s, std::uint64_t seed,
                          bool random_signs) {
  check_impulse_params(eta0, s);
  const Eigen::Index n = grid.size();
  const Eigen::Index m = impulse_count(grid, eta0);
  Engine engine(seed);

  std::vector<Eigen::Index> cells(static_cast<std::size_t>(n));
  std::iota(cells.begin(), cells.end(), Eigen::Index{0});
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto j = k + static_cast<Eigen::Index>(
                           uniform_below(engine, static_cast<std::uint64_t>(n - k)));
    std::swap(cells[static_cast<std::size_t>(k)], cells[static_cast<std::size_t>(j)]);
  }

  Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
  const double height = s / eta0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double sign = random_signs ? random_sign(engine) : 1.0;
    xi[cells[static_cast<std::size_t>(k)]] = sign * height;
  }
  return {Signal(grid, std::move(xi)), seed,
          random_signs ? NoiseKind::SaltPepper : NoiseKind::PureImpulse, {eta0, s, 0.0}};
}

}  // namespace

NoiseRealization gen_salt_pepper(const Grid& grid, double eta0, double s, std::uint64_t seed) {
  return impulses(grid, eta0, s, seed, true);
}

NoiseRealization gen_pure_impulse(const Grid& grid, double eta0, double s, std::uint64_t seed) {
  return impulses(grid, eta0, s, seed, false);
}

NoiseRealization gen_gaussian(const Grid& grid, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("sigma must be nonnegative");
  }
  const Eigen::Index n = grid.size();
  Engine engine(seed);
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; i += 2) {
    double z0, z1;
    standard_normal_pair(engine, z0, z1);
    xi[i] = sigma * z0;
    if (i + 1 < n) xi[i + 1] = sigma * z1;
  }
  return {Signal(grid, std::move(xi)), seed, NoiseKind::Gaussian, {0.0, 0.0, sigma}};
}

NoiseRealization zero_noise(const Grid& grid) {
  return {Signal::zeros(grid), 0, NoiseKind::None, {}};
}

void write_noise_record(std::ostream& out, const NoiseRealization& noise) {
  const auto old_precision = out.precision(17);
  out << "kind=" << to_string(noise.kind) << '\n'
      << "seed=" << noise.seed << '\n'
      << "eta0=" << noise.params.eta0 << '\n'
      << "s=" << noise.params.s << '\n'
      << "sigma=" << noise.params.sigma << '\n'
      << "n=" << noise.xi.size() << '\n'
      << "values\n";
  for (Eigen::Index i = 0; i < noise.xi.size(); ++i) out << noise.xi[i] << '\n';
  out.precision(old_precision);
}

NoiseRealization read_noise_record(std::istream& in) {
  NoiseRealization rec{Signal::zeros(Grid(1)), 0, NoiseKind::None, {}};
  Eigen::Index n = -1;
  std::string line;
  bool in_values = false;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (in_values) {
      values.push_back(std::stod(line));
      continue;
    }
    if (line == "values") {
      in_values = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad noise record line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "kind") {
      rec.kind = parse_noise_kind(value);
    } else if (key == "seed") {
      rec.seed = std::stoull(value);
    } else if (key == "eta0") {
      rec.params.eta0 = std::stod(value);
    } else if (key == "s") {
      rec.params.s = std::stod(value);
    } else if (key == "sigma") {
      rec.params.sigma = std::stod(value);
    } else if (key == "n") {
      n = std::stol(value);
    } else {
      throw std::invalid_argument("unknown noise record key: " + key);
    }
  }
  if (!in_values || static_cast<Eigen::Index>(values.size()) != n) {
    throw std::invalid_argument("noise record is truncated");
  }
  rec.xi = Signal(Grid(n), Eigen::Map<const Eigen::VectorXd>(values.data(), n));
  return rec;
}

EpsilonProfile epsilon_profile(const Signal& xi) {
  const Eigen::Index n = xi.size();
  std::vector<double> mag(xi.values().data(), xi.values().data() + n);
  for (double& v : mag) v = std::abs(v);
  // Descending; stable so equal magnitudes keep index order.
  std::stable_sort(mag.begin(), mag.end(), std::greater<>());

  EpsilonProfile profile{Eigen::VectorXd(n + 1), Eigen::VectorXd(n + 1)};
  const double w = xi.grid().weight();
  // Accumulate the tail from the smallest entries upward.
  double tail = 0.0;
  profile.eps[n] = 0.0;
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    tail += mag[static_cast<std::size_t>(j)];
    profile.eps[j] = w * tail;
  }
  for (Eigen::Index j = 0; j <= n; ++j) profile.eta[j] = static_cast<double>(j) * w;
  return profile;
}

double epsilon_at(const EpsilonProfile& profile, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  const Eigen::Index n = profile.eta.size() - 1;
  const double pos = eta * static_cast<double>(n);
  const auto j = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), n);
  if (j == n) return profile.eps[n];
  const double frac = pos - static_cast<double>(j);
  if (frac == 0.0) return profile.eps[j];
  return (1.0 - frac) * profile.eps[j] + frac * profile.eps[j + 1];
}

EtaBar eta_bar(const EpsilonProfile& profile, double gamma, double kappa) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
  if (!(profile.eps[0] > 0.0)) return {0.0, true};

  const double exponent = gamma / (2.0 - kappa);
  const auto f = [&](double eta) { return epsilon_at(profile, eta) - std::pow(eta, exponent); };
  double lo = 0.0;
  double hi = 1.0;
  double mid = 0.5;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if (std::abs(v) <= 1e-12) break;
    if (v > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  return {mid, false};
}

double improvement_factor(const EpsilonProfile& profile, double eta_bar, double kappa) {
  const double at_bar = epsilon_at(profile, eta_bar);
  if (at_bar <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(profile.eps[0] / at_bar, kappa);
}

}  // namespace l1tik
