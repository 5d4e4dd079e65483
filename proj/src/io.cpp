#include "l1tik/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace l1tik {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("invalid value for " + key + ": '" + text + "'");
  }
  return value;
}

}  // namespace

double parse_double(const std::string& key, const std::string& text) {
  return parse_value<double>(key, text);
}

long long parse_integer(const std::string& key, const std::string& text) {
  return parse_value<long long>(key, text);
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  return parse_value<std::uint64_t>(key, text);
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), trim(std::string_view(body).substr(eq + 1)));
  }
  return kv;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse_key_values(in);
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [key, value] : kv) out << key << '=' << value << '\n';
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "problem") {
    cfg.problem = value;
  } else if (key == "n") {
    cfg.n = parse_value<long>(key, value);
  } else if (key == "eta0_base") {
    cfg.eta0_base = parse_value<double>(key, value);
  } else if (key == "i_min") {
    cfg.i_min = parse_value<int>(key, value);
  } else if (key == "i_max") {
    cfg.i_max = parse_value<int>(key, value);
  } else if (key == "trials") {
    cfg.trials = parse_value<int>(key, value);
  } else if (key == "s") {
    cfg.s = parse_value<double>(key, value);
  } else if (key == "fidelity") {
    try {
      cfg.fidelity = parse_fidelity_choice(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "alpha_min") {
    cfg.alpha_grid.min = parse_value<double>(key, value);
  } else if (key == "alpha_max") {
    cfg.alpha_grid.max = parse_value<double>(key, value);
  } else if (key == "alpha_count") {
    cfg.alpha_grid.count = parse_value<int>(key, value);
  } else if (key == "master_seed") {
    cfg.master_seed = parse_value<std::uint64_t>(key, value);
  } else if (key == "kappa") {
    if (value == "auto") {
      cfg.kappa.reset();
    } else {
      cfg.kappa = parse_value<double>(key, value);
    }
  } else if (key == "phi_alpha_min") {
    cfg.phi_alpha_grid.min = parse_value<double>(key, value);
  } else if (key == "phi_alpha_max") {
    cfg.phi_alpha_grid.max = parse_value<double>(key, value);
  } else if (key == "phi_alpha_count") {
    cfg.phi_alpha_grid.count = parse_value<int>(key, value);
  } else if (key == "gamma") {
    cfg.gamma = parse_value<double>(key, value);
  } else if (key == "gap_tol") {
    cfg.gap_tol = parse_value<double>(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig config_from_key_values(const KeyValues& kv) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : kv) apply_config_value(cfg, key, value);
  return cfg;
}

KeyValues config_to_key_values(const ExperimentConfig& cfg) {
  return {
      {"problem", cfg.problem},
      {"n", std::to_string(cfg.n)},
      {"eta0_base", format_number(cfg.eta0_base)},
      {"i_min", std::to_string(cfg.i_min)},
      {"i_max", std::to_string(cfg.i_max)},
      {"trials", std::to_string(cfg.trials)},
      {"s", format_number(cfg.s)},
      {"fidelity", to_string(cfg.fidelity)},
      {"alpha_min", format_number(cfg.alpha_grid.min)},
      {"alpha_max", format_number(cfg.alpha_grid.max)},
      {"alpha_count", std::to_string(cfg.alpha_grid.count)},
      {"master_seed", std::to_string(cfg.master_seed)},
      {"kappa", cfg.kappa ? format_number(*cfg.kappa) : "auto"},
      {"phi_alpha_min", format_number(cfg.phi_alpha_grid.min)},
      {"phi_alpha_max", format_number(cfg.phi_alpha_grid.max)},
      {"phi_alpha_count", std::to_string(cfg.phi_alpha_grid.count)},
      {"gamma", format_number(cfg.gamma)},
      {"gap_tol", format_number(cfg.gap_tol)},
  };
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "eta0,trial,seed,alpha_opt,bregman_error,l1_residual,l2_error,gap,converged\n";
  for (const TrialRecord& r : records) {
    out << format_number(r.eta0) << ',' << r.trial << ',' << r.seed << ','
        << format_number(r.alpha_opt) << ',' << format_number(r.bregman_error) << ','
        << format_number(r.l1_residual) << ',' << format_number(r.l2_error) << ','
        << (r.gap ? format_number(*r.gap) : std::string()) << ',' << (r.converged ? 1 : 0)
        << '\n';
  }
}

void write_summary_csv(std::ostream& out, const RateSummary& summary) {
  out << "eta0,mean_bregman,sd_bregman,mean_residual,sd_residual,bound_value\n";
  for (const LevelSummary& l : summary.levels) {
    out << format_number(l.eta0) << ',' << format_number(l.mean_bregman) << ','
        << format_number(l.sd_bregman) << ',' << format_number(l.mean_residual) << ','
        << format_number(l.sd_residual) << ',' << format_number(l.bound_value) << '\n';
  }
}

void write_fit(std::ostream& out, const RateSummary& summary) {
  out << "fidelity=" << to_string(summary.fidelity) << '\n'
      << "kappa=" << format_number(summary.kappa) << '\n'
      << "kappa_source=" << (summary.kappa_estimated ? "estimated" : "config") << '\n'
      << "gamma=" << format_number(summary.gamma) << '\n'
      << "noise_free_bregman=" << format_number(summary.noise_free_bregman) << '\n'
      << "noise_free_residual=" << format_number(summary.noise_free_residual) << '\n';
  const auto fit = [&out](const char* name, const SlopeFit& f) {
    out << name << "_slope=" << format_number(f.slope) << '\n'
        << name << "_slope_half_width=" << format_number(f.half_width) << '\n'
        << name << "_theory=" << format_number(f.theory) << '\n'
        << name << "_constant=" << format_number(f.constant) << '\n'
        << name << "_points=" << f.points << '\n';
  };
  fit("bregman", summary.bregman);
  fit("residual", summary.residual);
}

void write_rates_dat(std::ostream& out, const RateSummary& summary) {
  out << "# eta0 mean_bregman sd_bregman mean_residual sd_residual bound_value in_fit\n";
  for (const LevelSummary& l : summary.levels) {
    out << format_number(l.eta0) << ' ' << format_number(l.mean_bregman) << ' '
        << format_number(l.sd_bregman) << ' ' << format_number(l.mean_residual) << ' '
        << format_number(l.sd_residual) << ' ' << format_number(l.bound_value) << ' '
        << (l.in_fit ? 1 : 0) << '\n';
  }
}

void write_manifest(std::ostream& out, const RunManifest& manifest) {
  out << "command=" << manifest.command << '\n'
      << "tool_version=" << manifest.tool_version << '\n'
      << "timestamp=" << manifest.timestamp << '\n'
      << "master_seed=" << manifest.master_seed << '\n';
  for (const std::string& file : manifest.outputs) out << "output=" << file << '\n';
  out << "# config snapshot\n";
  for (const auto& [key, value] : manifest.config) out << "config." << key << '=' << value << '\n';
}

}  // namespace l1tik
