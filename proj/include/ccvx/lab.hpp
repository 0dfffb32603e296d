#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccvx/estimate.hpp"
#include "ccvx/pp.hpp"

namespace ccvx {

// ---------------------------------------------------------------------------
// Configuration

/// Parses the TOML subset used by config files: [tables], key = value with
/// strings, numbers, booleans, arrays and inline tables, and # comments.
nlohmann::json parse_toml(const std::string& text);

struct ExperimentConfig {
  std::string domain = "ball(2)";
  int d = 2;
  Law law = Law::Poisson;
  DensitySpec density;
  SizeFunction size;
  std::vector<long> n_grid{2500, 5000, 10000, 20000};
  int replications = 200;
  Seed128 seed{0, 0x5eed};
  Estimator estimator = Estimator::McShell;
  long mc_budget = 1000000;
  double net_factor = 0.25;
  std::string output_dir = "out";
  std::vector<double> g_constants;  // coverage-probability scan
  bool timing = false;              // fill the ms column (breaks byte-identical reruns)

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& file);
};

DensitySpec parse_density(const nlohmann::json& j);
SizeFunction parse_size_function(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Records

struct ReplicationRecord {
  long n = 0;
  int rep = 0;
  std::string verdict;  // covered | not-covered | uncertain | error-<tag>
  double delta_v = 0;
  double scaled = 0;  // delta_v (n / log n)^{1/d}
  long points = 0;
  double ms = 0;
  double se = 0;  // Monte Carlo standard error of delta_v, kept in mc_se.csv
  bool ok() const { return verdict.rfind("error-", 0) != 0; }
};

struct SummaryRecord {
  long n = 0;
  int count = 0;
  double mean = 0;
  std::optional<double> var;
  std::optional<double> mc_var;         // mean squared Monte Carlo standard error
  std::optional<double> var_corrected;  // var - mc_var, the between-sample part
  double scaled_mean = 0;
  double cover_freq = 0;
  std::optional<double> ks;
  std::optional<double> w1;
};

/// Stream index of replication `rep` at sample size n.
std::uint64_t replication_stream(long n, int rep);

/// One replication: sample, coverage, delta_V.
ReplicationRecord run_replication(const ExperimentConfig& cfg, const Domain& dom, long n, int rep);

/// All (n, rep) pairs over a worker pool; records are reduced and passed to
/// `sink` in (n, rep) order regardless of completion order.
std::vector<ReplicationRecord> run_experiment(
    const ExperimentConfig& cfg, int workers = 1,
    const std::function<void(const ReplicationRecord&)>& sink = {});

std::vector<SummaryRecord> summarize(const std::vector<ReplicationRecord>& records);

/// Kolmogorov-Smirnov distance of standardized values to N(0,1).
double ks_normal(std::vector<double> standardized);
/// Mean |x_(i) - Phi^{-1}((i - 1/2)/m)| over sorted standardized values.
double w1_normal(std::vector<double> standardized);

struct RateFit {
  double exponent = 0;
  double intercept = 0;
  double r2 = 0;
};

/// Least squares of log(values) - power * log log n against log n.
RateFit fit_rate(const std::vector<double>& ns, const std::vector<double>& values,
                 double log_correction_power);

struct CoverageRow {
  double c = 0;
  long n = 0;
  int reps = 0;
  double freq = 0;
  int uncertain = 0;
};

/// Containment frequency for g = c at each n. The point samples are shared
/// across constants, so the frequencies are coupled monotonically in c.
std::vector<CoverageRow> coverage_probability_curve(const ExperimentConfig& cfg,
                                                    const std::vector<double>& g_constants,
                                                    int workers = 1);

struct ConjectureReport {
  double c_star = 0;
  double candidate = 0;    // c_star * sigma(bD)
  double conjectured = 0;  // quadrature of the conjectured limiting constant
  double ratio = 0;
  std::vector<std::pair<double, double>> scanned;  // (c, frequency)
};

/// Quadrature of (h_d kappa_{2d-2})^{-1/d} int (16 nu)^{1/(2d)} f^{-1/d} dsigma.
double conjectured_constant(const Domain& dom, const DensitySpec& f, long points = 20000);

ConjectureReport conjecture_probe(const Domain& dom, const DensitySpec& f, long n, int reps,
                                  double tolerance, Seed128 seed, int workers = 1,
                                  double lo = 0.25, double hi = 8.0);

// ---------------------------------------------------------------------------
// Output

std::string replication_csv_header();
std::string replication_csv_row(const ReplicationRecord& r);
std::string summary_csv(const std::vector<SummaryRecord>& s);
std::vector<ReplicationRecord> read_replication_csv(const std::filesystem::path& file);
std::string mc_se_csv(const std::vector<ReplicationRecord>& records);
/// Fills r.se from an mc_se.csv sidecar; rows are matched on (n, rep).
void read_mc_se_csv(const std::filesystem::path& file, std::vector<ReplicationRecord>& records);

/// Writes replications.csv, mc_se.csv, summary.csv, summary.json and the SVG plots.
void emit_outputs(const std::vector<ReplicationRecord>& records,
                  const std::vector<SummaryRecord>& summaries, int d,
                  const std::filesystem::path& out_dir);

/// Log-log plot of (x, y) points with an optional fitted line y = e^{b} x^{a}.
std::string svg_loglog(const std::string& title, const std::string& ylabel,
                       const std::vector<std::pair<double, double>>& pts,
                       std::optional<RateFit> fit);
/// Normal Q-Q plot of standardized values.
std::string svg_qq(const std::string& title, std::vector<double> standardized);

}  // namespace ccvx
