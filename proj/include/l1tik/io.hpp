#pragma once

#include "l1tik/experiments.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace l1tik {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered key=value pairs. Blank lines and text after '#' are ignored.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

/// Strict numeric parsing of config values; `key` only labels the error.
double parse_double(const std::string& key, const std::string& text);
long long parse_integer(const std::string& key, const std::string& text);
std::uint64_t parse_unsigned(const std::string& key, const std::string& text);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double value);

/// Flat schema for ExperimentConfig:
///   problem n eta0_base i_min i_max trials s fidelity
///   alpha_min alpha_max alpha_count master_seed kappa (number or "auto")
///   phi_alpha_min phi_alpha_max phi_alpha_count gamma gap_tol
/// Unknown keys and malformed values raise ConfigError.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig config_from_key_values(const KeyValues& kv);
KeyValues config_to_key_values(const ExperimentConfig& cfg);

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_summary_csv(std::ostream& out, const RateSummary& summary);
void write_fit(std::ostream& out, const RateSummary& summary);
/// Whitespace-separated columns with a '#' header, for gnuplot.
void write_rates_dat(std::ostream& out, const RateSummary& summary);

struct RunManifest {
  std::string command;
  KeyValues config;
  std::uint64_t master_seed = 0;
  std::string tool_version;
  std::string timestamp;
  std::vector<std::string> outputs;
};

void write_manifest(std::ostream& out, const RunManifest& manifest);

}  // namespace l1tik
