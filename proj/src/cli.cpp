#include "l1tik/cli.hpp"

#include "l1tik/experiments.hpp"
#include "l1tik/io.hpp"
#include "l1tik/noise.hpp"
#include "l1tik/operators.hpp"
#include "l1tik/solvers.hpp"
#include "l1tik/theory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#ifndef L1TIK_VERSION
#define L1TIK_VERSION "0.0.0"
#endif

namespace l1tik {

namespace {

namespace fs = std::filesystem;

struct OptionSpec {
  std::string key;
  std::string fallback;
  std::string help;
};

// Every subcommand takes its settings from three layers: built-in defaults,
// an optional key=value file given by --config, and explicit flags.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& description,
          std::vector<OptionSpec> specs)
      : specs_(std::move(specs)) {
    app_ = parent.add_subcommand(name, description);
    app_->add_option("--config", config_path_, "key=value settings file");
    app_->add_option("--out", out_dir_, "output directory")->capture_default_str();
    for (const OptionSpec& spec : specs_) {
      std::string names = "--" + spec.key;
      std::string dashed = spec.key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != spec.key) names = "--" + dashed + "," + names;
      std::string help = spec.help;
      if (!spec.fallback.empty()) help += " [" + spec.fallback + "]";
      flags_[spec.key] = app_->add_option(names, raw_[spec.key], help);
    }
  }

  bool parsed() const { return app_->parsed(); }

  // Merged settings in table order. Empty values mean "not given".
  KeyValues resolve() const {
    std::map<std::string, std::string> merged;
    for (const OptionSpec& spec : specs_) merged[spec.key] = spec.fallback;
    if (!config_path_.empty()) {
      for (const auto& [key, value] : read_key_values_file(config_path_)) {
        if (!merged.count(key)) throw ConfigError("unknown config key '" + key + "'");
        merged[key] = value;
      }
    }
    for (const OptionSpec& spec : specs_) {
      if (flags_.at(spec.key)->count() > 0) merged[spec.key] = raw_.at(spec.key);
    }
    KeyValues kv;
    for (const OptionSpec& spec : specs_) kv.emplace_back(spec.key, merged[spec.key]);
    return kv;
  }

  const std::string& out_dir() const { return out_dir_; }
  const std::string& name() const { return app_->get_name(); }
  std::string help() const { return app_->help(); }

 private:
  CLI::App* app_ = nullptr;
  std::vector<OptionSpec> specs_;
  std::map<std::string, std::string> raw_;
  std::map<std::string, CLI::Option*> flags_;
  std::string config_path_;
  std::string out_dir_ = ".";
};

const std::string& lookup(const KeyValues& kv, const std::string& key) {
  for (const auto& entry : kv) {
    if (entry.first == key) return entry.second;
  }
  throw ConfigError("missing setting '" + key + "'");
}

double get_double(const KeyValues& kv, const std::string& key) {
  return parse_double(key, lookup(kv, key));
}

long long get_integer(const KeyValues& kv, const std::string& key) {
  return parse_integer(key, lookup(kv, key));
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& path) : root_(path) { fs::create_directories(root_); }

  std::ofstream open(const std::string& file) {
    std::ofstream out(root_ / file);
    if (!out) throw std::runtime_error("cannot write " + (root_ / file).string());
    out.precision(17);
    written_.push_back(file);
    return out;
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path root_;
  std::vector<std::string> written_;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void finish(OutputDir& dir, const std::string& command, const KeyValues& settings,
            std::uint64_t seed) {
  {
    std::ofstream snap = dir.open("config.txt");
    snap << "# " << command << " settings; rerun with --config config.txt\n";
    write_key_values(snap, settings);
  }
  RunManifest manifest{command, settings, seed, L1TIK_VERSION, utc_timestamp(), dir.written()};
  manifest.outputs.push_back("manifest.txt");
  std::ofstream out = dir.open("manifest.txt");
  write_manifest(out, manifest);
}

NoiseRealization make_noise(const Grid& grid, NoiseKind kind, double eta0, double s, double sigma,
                            std::uint64_t seed) {
  switch (kind) {
    case NoiseKind::None:
      return zero_noise(grid);
    case NoiseKind::SaltPepper:
      return gen_salt_pepper(grid, eta0, s, seed);
    case NoiseKind::PureImpulse:
      return gen_pure_impulse(grid, eta0, s, seed);
    case NoiseKind::Gaussian:
      return gen_gaussian(grid, sigma, seed);
  }
  return zero_noise(grid);
}

std::vector<OptionSpec> solve_options() {
  return {
      {"problem", "sine_1", "test problem"},
      {"n", "200", "grid size"},
      {"fidelity", "l1", "l1 or l2"},
      {"alpha", "", "regularization parameter (required)"},
      {"noise", "none", "none, salt-pepper, pure or gaussian"},
      {"eta0", "0.05", "impulse carrier measure"},
      {"s", "1", "impulse L1 mass"},
      {"sigma", "0.01", "gaussian standard deviation"},
      {"seed", "1", "noise seed"},
      {"gap_tol", "1e-08", "relative duality gap tolerance"},
      {"max_iter", "50000", "iteration cap for the L1 solver"},
  };
}

int cmd_solve(const Command& cmd, std::ostream& out) {
  const KeyValues kv = cmd.resolve();
  if (lookup(kv, "alpha").empty()) throw CLI::RequiredError("--alpha");
  const Grid grid(get_integer(kv, "n"));
  const TestProblem problem = make_test_problem(lookup(kv, "problem"), grid);
  const std::uint64_t seed = parse_unsigned("seed", lookup(kv, "seed"));
  const NoiseRealization noise =
      make_noise(grid, parse_noise_kind(lookup(kv, "noise")), get_double(kv, "eta0"),
                 get_double(kv, "s"), get_double(kv, "sigma"), seed);
  const Signal g_obs = problem.g_dag_analytic + noise.xi;

  const KernelOperator op = assemble(grid);
  SolveConfig cfg;
  cfg.alpha = get_double(kv, "alpha");
  cfg.fidelity = parse_fidelity(lookup(kv, "fidelity"));
  cfg.gap_tol = get_double(kv, "gap_tol");
  cfg.max_iter = static_cast<int>(get_integer(kv, "max_iter"));
  const SolveResult result = solve(op, g_obs, cfg);

  const Signal residual = apply(op, result.u) - g_obs;
  const double error = bregman_error(result.u, problem.u_dag);
  const double u_norm = norm(result.u, Norm::L2);

  OutputDir dir(cmd.out_dir());
  {
    std::ofstream f = dir.open("solution.csv");
    f << "x,u,u_dag,g_obs,residual" << (result.p ? ",p" : "") << '\n';
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      f << format_number(grid.point(i)) << ',' << format_number(result.u[i]) << ','
        << format_number(problem.u_dag[i]) << ',' << format_number(g_obs[i]) << ','
        << format_number(residual[i]);
      if (result.p) f << ',' << format_number((*result.p)[i]);
      f << '\n';
    }
  }
  {
    std::ofstream f = dir.open("noise.txt");
    write_noise_record(f, noise);
  }
  const std::string gap = result.gap ? format_number(*result.gap) : "none";
  {
    std::ofstream f = dir.open("summary.txt");
    write_key_values(f, {{"fidelity", to_string(cfg.fidelity)},
                         {"alpha", format_number(cfg.alpha)},
                         {"bregman_error", format_number(error)},
                         {"u_norm_l2", format_number(u_norm)},
                         {"l1_residual", format_number(norm(residual, Norm::L1))},
                         {"primal_value", format_number(result.primal_value)},
                         {"gap", gap},
                         {"iterations", std::to_string(result.iterations)},
                         {"converged", result.converged ? "1" : "0"}});
  }
  finish(dir, "solve", kv, seed);
  out << "alpha=" << format_number(cfg.alpha) << " bregman_error=" << format_number(error)
      << " u_norm=" << format_number(u_norm) << " gap=" << gap
      << " converged=" << (result.converged ? "true" : "false") << '\n';
  return 0;
}

std::vector<OptionSpec> rates_options() {
  static const std::map<std::string, std::string> help = {
      {"problem", "test problem"},
      {"n", "grid size"},
      {"eta0_base", "noise levels are eta0_base^i"},
      {"i_min", "first exponent i"},
      {"i_max", "last exponent i"},
      {"trials", "noise realizations per level"},
      {"s", "impulse L1 mass"},
      {"fidelity", "l1, l2 or both"},
      {"alpha_min", "smallest alpha in the search grid"},
      {"alpha_max", "largest alpha in the search grid"},
      {"alpha_count", "number of log-spaced alphas"},
      {"master_seed", "seed from which trial seeds are split"},
      {"kappa", "index exponent, or auto to estimate it"},
      {"phi_alpha_min", "smallest alpha for the phi estimate"},
      {"phi_alpha_max", "largest alpha for the phi estimate"},
      {"phi_alpha_count", "alphas for the phi estimate"},
      {"gamma", "noise exponent of the rate"},
      {"gap_tol", "relative duality gap tolerance"},
  };
  std::vector<OptionSpec> specs;
  for (const auto& [key, value] : config_to_key_values(ExperimentConfig{})) {
    specs.push_back({key, value, help.at(key)});
  }
  return specs;
}

int cmd_rates(const Command& cmd, std::ostream& out) {
  const KeyValues kv = cmd.resolve();
  const ExperimentConfig cfg = config_from_key_values(kv);
  validate(cfg);
  const std::vector<RateExperiment> runs = run_rate_experiment(cfg);

  OutputDir dir(cmd.out_dir());
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const RateExperiment& run = runs[k];
    const std::string suffix = k == 0 ? "" : "_" + to_string(run.summary.fidelity);
    {
      std::ofstream f = dir.open("trials" + suffix + ".csv");
      write_trials_csv(f, run.records);
    }
    {
      std::ofstream f = dir.open("summary" + suffix + ".csv");
      write_summary_csv(f, run.summary);
    }
    {
      std::ofstream f = dir.open("fit" + suffix + ".txt");
      write_fit(f, run.summary);
    }
    {
      std::ofstream f = dir.open("rates" + suffix + ".dat");
      write_rates_dat(f, run.summary);
    }
    const long unconverged = std::count_if(run.records.begin(), run.records.end(),
                                           [](const TrialRecord& r) { return !r.converged; });
    out << to_string(run.summary.fidelity) << ": kappa=" << format_number(run.summary.kappa)
        << " bregman_slope=" << format_number(run.summary.bregman.slope)
        << " (theory " << format_number(run.summary.bregman.theory) << ")"
        << " residual_slope=" << format_number(run.summary.residual.slope) << " (theory "
        << format_number(run.summary.residual.theory) << ")"
        << " unconverged=" << unconverged << '\n';
  }
  finish(dir, "rates", kv, cfg.master_seed);
  return 0;
}

std::vector<OptionSpec> epsilon_options() {
  return {
      {"noise", "salt-pepper", "none, salt-pepper, pure or gaussian"},
      {"input", "", "file of noise samples (overrides the generator)"},
      {"n", "200", "grid size"},
      {"eta0", "0.1", "impulse carrier measure"},
      {"s", "1", "impulse L1 mass"},
      {"sigma", "0.01", "gaussian standard deviation"},
      {"seed", "1", "noise seed"},
      {"gamma", "5", "noise exponent"},
      {"kappa", "0.5", "index exponent"},
  };
}

// Either a noise record or bare samples, one per line.
Signal read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read samples file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (text.find('=') != std::string::npos) {
    std::istringstream record(text);
    return read_noise_record(record).xi;
  }
  std::vector<double> values;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) values.push_back(parse_double("sample", token));
  }
  if (values.empty()) throw ConfigError("no samples in " + path);
  const Grid grid(static_cast<Eigen::Index>(values.size()));
  return Signal(grid, Eigen::Map<const Eigen::VectorXd>(values.data(), grid.size()));
}

int cmd_epsilon(const Command& cmd, std::ostream& out) {
  const KeyValues kv = cmd.resolve();
  const std::uint64_t seed = parse_unsigned("seed", lookup(kv, "seed"));
  const double gamma = get_double(kv, "gamma");
  const double kappa = get_double(kv, "kappa");
  const std::string& input = lookup(kv, "input");
  std::optional<NoiseRealization> generated;
  std::optional<Signal> xi;
  if (input.empty()) {
    const Grid grid(get_integer(kv, "n"));
    generated = make_noise(grid, parse_noise_kind(lookup(kv, "noise")), get_double(kv, "eta0"),
                           get_double(kv, "s"), get_double(kv, "sigma"), seed);
    xi = generated->xi;
  } else {
    xi = read_samples(input);
  }
  const EpsilonProfile profile = epsilon_profile(*xi);
  const EtaBar bar = eta_bar(profile, gamma, kappa);
  const double factor = improvement_factor(profile, bar.eta, kappa);

  OutputDir dir(cmd.out_dir());
  {
    std::ofstream f = dir.open("epsilon.csv");
    f << "eta,eps\n";
    for (Eigen::Index j = 0; j < profile.eta.size(); ++j) {
      f << format_number(profile.eta[j]) << ',' << format_number(profile.eps[j]) << '\n';
    }
  }
  if (generated) {
    std::ofstream f = dir.open("noise.txt");
    write_noise_record(f, *generated);
  }
  {
    std::ofstream f = dir.open("summary.txt");
    write_key_values(f, {{"eps_at_zero", format_number(profile.eps[0])},
                         {"sup_norm", format_number(norm(*xi, Norm::Linf))},
                         {"eta_bar", format_number(bar.eta)},
                         {"zero_noise", bar.zero_noise ? "1" : "0"},
                         {"improvement_factor", format_number(factor)}});
  }
  finish(dir, "epsilon", kv, seed);
  out << "eta_bar=" << format_number(bar.eta) << " improvement_factor=" << format_number(factor)
      << '\n';
  return 0;
}

std::vector<OptionSpec> estimate_phi_options() {
  return {
      {"problem", "sine_1", "test problem"},
      {"n", "200", "grid size"},
      {"alpha_min", "0.0001", "smallest alpha"},
      {"alpha_max", "10", "largest alpha"},
      {"alpha_count", "31", "number of log-spaced alphas"},
      {"synthetic", "", "c,kappa: use the closed-form psi of c t^kappa instead of solves"},
  };
}

int cmd_estimate_phi(const Command& cmd, std::ostream& out) {
  const KeyValues kv = cmd.resolve();
  AlphaGrid grid{get_double(kv, "alpha_min"), get_double(kv, "alpha_max"),
                 static_cast<int>(get_integer(kv, "alpha_count"))};
  const Eigen::VectorXd alphas = grid.values();
  PhiFit fit;
  const std::string& synthetic = lookup(kv, "synthetic");
  if (!synthetic.empty()) {
    const auto comma = synthetic.find(',');
    if (comma == std::string::npos) throw ConfigError("--synthetic expects c,kappa");
    const IndexFunction phi = make_power_index(parse_double("c", synthetic.substr(0, comma)),
                                               parse_double("kappa", synthetic.substr(comma + 1)));
    fit.alpha = alphas;
    fit.approx_error = alphas.unaryExpr([&](double a) { return psi(phi, a); });
    fit.estimate = phi_from_psi(fit.alpha, fit.approx_error);
  } else {
    const Grid mesh(get_integer(kv, "n"));
    fit = estimate_phi(assemble(mesh), make_test_problem(lookup(kv, "problem"), mesh), alphas);
  }

  OutputDir dir(cmd.out_dir());
  {
    std::ofstream f = dir.open("approx_error.csv");
    f << "alpha,approx_error\n";
    for (Eigen::Index k = 0; k < fit.alpha.size(); ++k) {
      f << format_number(fit.alpha[k]) << ',' << format_number(fit.approx_error[k]) << '\n';
    }
  }
  {
    std::ofstream f = dir.open("phi.csv");
    f << "t,phi\n";
    for (Eigen::Index k = 0; k < fit.estimate.t.size(); ++k) {
      f << format_number(fit.estimate.t[k]) << ',' << format_number(fit.estimate.phi[k]) << '\n';
    }
  }
  {
    std::ofstream f = dir.open("fit.txt");
    write_key_values(f, {{"c", format_number(fit.estimate.c)},
                         {"kappa", format_number(fit.estimate.kappa)},
                         {"residual", format_number(fit.estimate.residual)},
                         {"linear", fit.estimate.linear ? "1" : "0"}});
  }
  finish(dir, "estimate-phi", kv, 0);
  out << "c=" << format_number(fit.estimate.c) << " kappa=" << format_number(fit.estimate.kappa)
      << " residual=" << format_number(fit.estimate.residual)
      << (fit.estimate.linear ? " linear=1" : "") << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"L1/L2 Tikhonov regularization for a Green's-kernel integral equation",
               "l1tik"};
  app.set_version_flag("--version", L1TIK_VERSION);
  app.require_subcommand(1);

  const Command solve_cmd(app, "solve", "solve one regularized problem", solve_options());
  const Command rates_cmd(app, "rates", "noise sweep with optimal alpha per trial",
                          rates_options());
  const Command eps_cmd(app, "epsilon", "impulsiveness profile of a noise vector",
                        epsilon_options());
  const Command phi_cmd(app, "estimate-phi", "estimate the index function from approximation errors",
                        estimate_phi_options());

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const Command* active = nullptr;
  for (const Command* c : {&solve_cmd, &rates_cmd, &eps_cmd, &phi_cmd}) {
    if (c->parsed()) active = c;
  }
  try {
    if (active == &solve_cmd) return cmd_solve(solve_cmd, out);
    if (active == &rates_cmd) return cmd_rates(rates_cmd, out);
    if (active == &eps_cmd) return cmd_epsilon(eps_cmd, out);
    return cmd_estimate_phi(phi_cmd, out);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace l1tik
