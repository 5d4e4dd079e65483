#include "l1tik/cli.hpp"
#include "l1tik/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace l1tik;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(L1TIK_BINARY_DIR) / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::string* header) {
  std::ifstream in(path);
  std::getline(in, *header);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

KeyValues read_kv(const fs::path& path) { return read_key_values_file(path.string()); }

std::string value_of(const KeyValues& kv, const std::string& key) {
  for (const auto& [k, v] : kv) {
    if (k == key) return v;
  }
  return "<missing>";
}

void write_file(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

const char* kSmallRates =
    "# reduced sweep\n"
    "n = 40\n"
    "i_min = 5\n"
    "i_max = 7   # three levels\n"
    "trials = 2\n"
    "alpha_min = 1e-4\n"
    "alpha_count = 13\n"
    "kappa = 1\n";

}  // namespace

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  std::istringstream in("# header\n\n a = 1 \nb=two # note\nc=\n");
  const KeyValues kv = parse_key_values(in);
  ASSERT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"a", "1"}));
  EXPECT_EQ(kv[1].second, "two");
  EXPECT_EQ(kv[2].second, "");
  std::istringstream bad("novalue\n");
  EXPECT_THROW(parse_key_values(bad), ConfigError);
}

TEST(ConfigSchema, RoundTripsEveryField) {
  ExperimentConfig cfg;
  cfg.problem = "sine_3";
  cfg.n = 123;
  cfg.eta0_base = 0.7;
  cfg.i_min = 2;
  cfg.i_max = 9;
  cfg.trials = 4;
  cfg.s = 2.5;
  cfg.fidelity = FidelityChoice::Both;
  cfg.alpha_grid = {1e-7, 0.5, 33};
  cfg.master_seed = 18446744073709551615ull;
  cfg.kappa = 0.3;
  cfg.phi_alpha_grid = {1e-3, 3.0, 12};
  cfg.gamma = 4.0;
  cfg.gap_tol = 1e-9;
  const ExperimentConfig back = config_from_key_values(config_to_key_values(cfg));
  EXPECT_EQ(config_to_key_values(back), config_to_key_values(cfg));
  EXPECT_EQ(back.master_seed, cfg.master_seed);
  EXPECT_EQ(back.eta0_base, 0.7);
  EXPECT_EQ(*back.kappa, 0.3);
  EXPECT_FALSE(config_from_key_values({{"kappa", "auto"}}).kappa.has_value());
  EXPECT_THROW(config_from_key_values({{"colour", "red"}}), ConfigError);
  EXPECT_THROW(config_from_key_values({{"n", "12x"}}), ConfigError);
  EXPECT_THROW(config_from_key_values({{"fidelity", "l7"}}), ConfigError);
}

TEST(Csv, HeadersAreExact) {
  std::ostringstream trials;
  write_trials_csv(trials, {});
  EXPECT_EQ(trials.str(), "eta0,trial,seed,alpha_opt,bregman_error,l1_residual,l2_error,gap,converged\n");
  std::ostringstream summary;
  write_summary_csv(summary, {});
  EXPECT_EQ(summary.str(), "eta0,mean_bregman,sd_bregman,mean_residual,sd_residual,bound_value\n");
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e-17}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(1.0), "1");
}

TEST(Cli, SolveBenchmarkHasZeroError) {
  const fs::path dir = scratch("solve_l1");
  const CliRun r = run({"solve", "--problem", "benchmark_omega_one", "--n", "80", "--fidelity", "l1",
                     "--alpha", "0.01", "--noise", "none", "--out", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("converged=true"), std::string::npos);
  const KeyValues summary = read_kv(dir / "summary.txt");
  EXPECT_LT(std::stod(value_of(summary, "bregman_error")), 1e-10);
  std::string header;
  const auto rows = read_numeric_csv(dir / "solution.csv", &header);
  EXPECT_EQ(header, "x,u,u_dag,g_obs,residual,p");
  EXPECT_EQ(rows.size(), 80u);
}

TEST(Cli, SolveHeavyL2PenaltyShrinksSolution) {
  const fs::path dir = scratch("solve_l2");
  const CliRun r = run({"solve", "--fidelity", "l2", "--alpha", "1e8", "--n", "50", "--noise",
                     "salt-pepper", "--out", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_LT(std::stod(value_of(read_kv(dir / "summary.txt"), "u_norm_l2")), 1e-8);
  EXPECT_EQ(value_of(read_kv(dir / "summary.txt"), "gap"), "none");
}

TEST(Cli, UsageErrorsAreNonzero) {
  const fs::path dir = scratch("usage");
  EXPECT_NE(run({"solve", "--out", dir.string()}).status, 0);
  EXPECT_NE(run({"solve", "--alpha", "0.1", "--bogus", "1"}).status, 0);
  EXPECT_NE(run({"solve", "--alpha", "abc", "--out", dir.string()}).status, 0);
  EXPECT_NE(run({"solve", "--alpha", "0.1", "--noise", "pink", "--out", dir.string()}).status, 0);
  EXPECT_NE(run({}).status, 0);
  EXPECT_NE(run({"frobnicate"}).status, 0);
  EXPECT_NE(run({"rates", "--config", (dir / "missing.cfg").string()}).status, 0);
  write_file(dir / "bad.cfg", "trials = 2\nwavelength = 3\n");
  EXPECT_NE(run({"rates", "--config", (dir / "bad.cfg").string(), "--out", dir.string()}).status, 0);
  EXPECT_NE(run({"epsilon", "--noise", "salt-pepper", "--eta0", "2", "--out", dir.string()}).status, 0);
  EXPECT_EQ(run({"--help"}).status, 0);
}

TEST(Cli, SolveSoftFailureExitsZero) {
  const fs::path dir = scratch("soft");
  const CliRun r = run({"solve", "--alpha", "1e-6", "--noise", "salt-pepper", "--eta0", "0.2",
                     "--max-iter", "1", "--gap-tol", "1e-300", "--out", dir.string()});
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(value_of(read_kv(dir / "summary.txt"), "converged"), "0");
}

TEST(Cli, RatesWritesFilesAndIsDeterministic) {
  const fs::path dir = scratch("rates");
  write_file(dir / "small.cfg", kSmallRates);
  const fs::path a = dir / "a";
  const fs::path b = dir / "b";
  const fs::path c = dir / "c";
  ASSERT_EQ(run({"rates", "--config", (dir / "small.cfg").string(), "--out", a.string()}).status, 0);
  ASSERT_EQ(run({"rates", "--config", (dir / "small.cfg").string(), "--out", b.string()}).status, 0);
  // Rerun from the snapshot the first run wrote.
  ASSERT_EQ(run({"rates", "--config", (a / "config.txt").string(), "--out", c.string()}).status, 0);
  for (const char* file : {"trials.csv", "summary.csv", "fit.txt", "rates.dat"}) {
    EXPECT_EQ(slurp(a / file), slurp(b / file)) << file;
    EXPECT_EQ(slurp(a / file), slurp(c / file)) << file;
  }
  std::string header;
  EXPECT_EQ(read_numeric_csv(a / "summary.csv", &header).size(), 3u);
  std::ifstream trials(a / "trials.csv");
  int lines = 0;
  for (std::string line; std::getline(trials, line);) ++lines;
  EXPECT_EQ(lines, 1 + 3 * 2);

  const KeyValues manifest = read_kv(a / "manifest.txt");
  EXPECT_EQ(value_of(manifest, "command"), "rates");
  int listed = 0;
  for (const auto& [key, value] : manifest) {
    if (key == "output") {
      ++listed;
      EXPECT_TRUE(fs::exists(a / value)) << value;
    }
  }
  EXPECT_EQ(listed, 6);
  EXPECT_EQ(value_of(manifest, "config.trials"), "2");
}

TEST(Cli, RatesFlagsOverrideConfig) {
  const fs::path dir = scratch("override");
  write_file(dir / "small.cfg", kSmallRates);
  ASSERT_EQ(run({"rates", "--config", (dir / "small.cfg").string(), "--trials", "1",
                 "--fidelity", "both", "--out", dir.string()})
                .status,
            0);
  EXPECT_EQ(value_of(read_kv(dir / "config.txt"), "trials"), "1");
  EXPECT_TRUE(fs::exists(dir / "trials_l2.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary_l2.csv"));
}

TEST(Cli, EpsilonPureImpulseProfile) {
  const fs::path dir = scratch("epsilon");
  const CliRun r = run({"epsilon", "--noise", "pure", "--eta0", "0.1", "--s", "1", "--n", "100",
                     "--out", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("eta_bar="), std::string::npos);
  std::string header;
  const auto rows = read_numeric_csv(dir / "epsilon.csv", &header);
  EXPECT_EQ(header, "eta,eps");
  ASSERT_EQ(rows.size(), 101u);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j][0] <= 0.1) EXPECT_NEAR(rows[j][1], 1.0 - rows[j][0] / 0.1, 1.0 / 100);
    if (j > 0) EXPECT_LE(rows[j][1], rows[j - 1][1]);
  }
}

TEST(Cli, EpsilonFromSampleFile) {
  const fs::path dir = scratch("epsilon_input");
  write_file(dir / "xi.txt", "# samples\n4\n-2\n0\n0\n");
  ASSERT_EQ(run({"epsilon", "--input", (dir / "xi.txt").string(), "--out", dir.string()}).status, 0);
  std::string header;
  const auto rows = read_numeric_csv(dir / "epsilon.csv", &header);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][1], 1.5);
  EXPECT_EQ(rows[1][1], 0.5);
  EXPECT_EQ(rows[2][1], 0.0);
}

TEST(Cli, EstimatePhiSyntheticAndBenchmark) {
  const fs::path syn = scratch("phi_synthetic");
  ASSERT_EQ(run({"estimate-phi", "--synthetic", "2,0.25", "--alpha-min", "1e-4", "--alpha-max",
                 "1", "--out", syn.string()})
                .status,
            0);
  EXPECT_NEAR(std::stod(value_of(read_kv(syn / "fit.txt"), "kappa")), 0.25, 0.0125);

  const fs::path bench = scratch("phi_benchmark");
  const CliRun r = run({"estimate-phi", "--problem", "benchmark_omega_one", "--n", "40",
                     "--alpha-count", "12", "--out", bench.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(value_of(read_kv(bench / "fit.txt"), "linear"), "1");
  EXPECT_EQ(value_of(read_kv(bench / "fit.txt"), "kappa"), "1");
  std::string header;
  EXPECT_EQ(read_numeric_csv(bench / "approx_error.csv", &header).size(), 12u);
  EXPECT_EQ(header, "alpha,approx_error");
  EXPECT_FALSE(read_numeric_csv(bench / "phi.csv", &header).empty());
  EXPECT_EQ(header, "t,phi");
}

TEST(ConfigSchema, ShippedRatesConfigMatchesDefaults) {
  const KeyValues shipped = read_key_values_file(std::string(L1TIK_SOURCE_DIR) + "/configs/rates.cfg");
  EXPECT_EQ(config_to_key_values(config_from_key_values(shipped)),
            config_to_key_values(ExperimentConfig{}));
}
