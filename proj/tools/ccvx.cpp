#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ccvx/domains.hpp"
#include "ccvx/estimate.hpp"
#include "ccvx/lab.hpp"

using namespace ccvx;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAudit = 3;

int domain_info(const std::string& id) {
  const DomainPtr dom = make_domain(id);
  ojson j;
  j["id"] = dom->id();
  j["catalogue"] = to_string(dom->tag());
  j["d"] = dom->dim();
  j["surface_area"] = dom->surface_area();
  j["volume"] = dom->volume();
  j["convexity_margin"] = dom->convexity_margin();
  j["quasimetric_constant"] = dom->quasimetric_constant();
  RngStream rng(Seed128{0, 1}, 0);
  const CVec w = sample_uniform_boundary(*dom, rng);
  ojson probe;
  std::vector<double> re;
  for (int k = 0; k < dom->dim(); ++k) {
    re.push_back(w[k].real());
    re.push_back(w[k].imag());
  }
  probe["point"] = re;
  probe["nu"] = curvature_nu(*dom, w);
  const CurvatureData c = curvature_polys(*dom, w);
  probe["principal_curvatures"] = std::vector<double>(c.curvatures.begin(), c.curvatures.end());
  probe["s"] = std::vector<double>(c.s.begin(), c.s.end());
  j["boundary_probe"] = probe;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int selftest_oracles() {
  int failed = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::printf("%-28s %s  %s\n", name.c_str(), ok ? "ok  " : "FAIL", detail.c_str());
    failed += ok ? 0 : 1;
  };
  char buf[256];

  const double pi2 = M_PI * M_PI;
  for (double delta : {0.05, 0.02, 0.01}) {
    const double r = ball_cap_area_oracle(2, delta) / (delta * delta);
    std::snprintf(buf, sizeof buf, "delta=%g ratio/pi^2=%.5f", delta, r / pi2);
    report("cap constant", std::abs(r / pi2 - 1.0) <= 0.02, buf);
  }

  {
    const double a = ball_cut_volume_oracle(2, 0.05), b = ball_cut_volume_oracle(2, 0.1);
    const double slope = std::log(b / a) / std::log(2.0);
    std::snprintf(buf, sizeof buf, "slope=%.4f", slope);
    report("cut oracle slope", std::abs(slope - 3.0) <= 0.05, buf);
  }

  {
    const DomainPtr ball = make_domain("ball(2)");
    for (double delta : {0.05, 0.1}) {
      CVec w = CVec::Zero(2);
      w[0] = 1.0;
      SourceSample s;
      s.points = {w};
      s.sizes = {delta};
      s.n = 1;
      const PreparedSources src(*ball, s);
      const VolumeEstimate e = union_cut_volume_mc(src, 200000, RngStream(Seed128{0, 7}, 0));
      const double oracle = ball_cut_volume_oracle(2, delta);
      const double z = (e.value - oracle) / e.se;
      std::snprintf(buf, sizeof buf, "delta=%g mc=%.6g oracle=%.6g z=%.2f", delta, e.value, oracle, z);
      report("single cut MC", std::abs(z) <= 4.0, buf);
    }
  }

  {
    const DomainPtr ball = make_domain("ball(2)");
    for (double c : {0.05, 0.1, 0.2}) {
      const VolumeEstimate e = tube_volume_for_field(
          *ball, [c](const std::vector<CVec>& z) { return std::vector<double>(z.size(), c); }, 64,
          RngStream(Seed128{0, 9}, 0));
      const double exact = sphere_tube_closed_form(2, c);
      const double rel = std::abs(e.value / exact - 1.0);
      std::snprintf(buf, sizeof buf, "c=%g value=%.8f rel=%.2e", c, e.value, rel);
      report("tube formula", rel <= 1e-10, buf);
    }
  }

  {
    const double a = size_at(SizeFunction{}, 100, CVec::Zero(2));
    const double b = size_at(SizeFunction{}, 10000, CVec::Zero(2));
    std::snprintf(buf, sizeof buf, "n=100 %.7f n=1e4 %.7f", a, b);
    report("size function", std::abs(a - 0.2145966) < 1e-6 && std::abs(b - 0.0303485) < 1e-6, buf);
  }
  return failed ? kExitAudit : 0;
}

std::string to_hex(const Seed128& s) { return s.to_hex(); }

int coverage_cmd(const std::string& config, int workers) {
  const ExperimentConfig cfg = ExperimentConfig::load(config);
  if (cfg.g_constants.empty()) throw ConfigError("coverage needs g_constants in the config");
  const auto rows = coverage_probability_curve(cfg, cfg.g_constants, workers);
  std::string csv = "c,n,reps,freq,uncertain\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g,%ld,%d,%.17g,%d\n", r.c, r.n, r.reps, r.freq, r.uncertain);
    csv += buf;
  }
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream(std::filesystem::path(cfg.output_dir) / "coverage.csv", std::ios::binary) << csv;
  std::cout << csv;
  return 0;
}

int experiment_run(const std::string& config, const std::string& seed_hex, int workers,
                   long mc_budget, const std::string& out) {
  ExperimentConfig cfg = ExperimentConfig::load(config);
  if (!seed_hex.empty()) cfg.seed = Seed128::from_hex(seed_hex);
  if (mc_budget > 0) cfg.mc_budget = mc_budget;
  if (!out.empty()) cfg.output_dir = out;
  cfg.validate();
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);

  ojson meta;
  meta["domain"] = cfg.domain;
  meta["d"] = cfg.d;
  meta["seed"] = to_hex(cfg.seed);
  meta["replications"] = cfg.replications;
  meta["n_grid"] = cfg.n_grid;
  meta["mc_budget"] = cfg.mc_budget;
  meta["estimator"] = to_string(cfg.estimator);
  std::ofstream(dir / "run.json", std::ios::binary) << meta.dump(2) << "\n";

  // rows are streamed as they are reduced, then the full set is rewritten by emit_outputs
  std::ofstream stream(dir / "replications.csv", std::ios::binary);
  stream << replication_csv_header() << "\n";
  int errors = 0;
  const auto records = run_experiment(cfg, workers, [&](const ReplicationRecord& r) {
    stream << replication_csv_row(r) << "\n";
    stream.flush();
    errors += r.ok() ? 0 : 1;
  });
  stream.close();
  const auto summaries = summarize(records);
  emit_outputs(records, summaries, cfg.d, dir);
  std::cout << summary_csv(summaries);
  if (errors) std::cerr << errors << " replications ended in an error row\n";
  for (const auto& r : records)
    if (r.verdict == "error-certificate") return kExitAudit;
  return 0;
}

int experiment_analyze(const std::string& dir_s) {
  const std::filesystem::path dir = dir_s;
  int d = 2;
  if (std::ifstream in(dir / "run.json"); in) {
    try {
      d = nlohmann::json::parse(in).at("d").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError((dir / "run.json").string() + ": " + e.what());
    }
  }
  auto records = read_replication_csv(dir / "replications.csv");
  if (std::filesystem::exists(dir / "mc_se.csv")) read_mc_se_csv(dir / "mc_se.csv", records);
  const auto summaries = summarize(records);
  emit_outputs(records, summaries, d, dir);
  std::cout << summary_csv(summaries);
  return 0;
}

int conjecture_cmd(const std::string& domain, long n, int reps, double tol,
                   const std::string& seed_hex, int workers) {
  const DomainPtr dom = make_domain(domain);
  const DensitySpec f;
  const Seed128 seed = seed_hex.empty() ? Seed128{0, 0x5eed} : Seed128::from_hex(seed_hex);
  const ConjectureReport r = conjecture_probe(*dom, f, n, reps, tol, seed, workers);
  ojson j;
  j["domain"] = dom->id();
  j["n"] = n;
  j["replications"] = reps;
  j["c_star"] = r.c_star;
  j["candidate"] = r.candidate;
  j["conjectured"] = r.conjectured;
  j["ratio"] = r.ratio;
  ojson scan = ojson::array();
  for (const auto& [c, fr] : r.scanned) scan.push_back({{"c", c}, {"freq", fr}});
  j["scanned"] = scan;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ccvx: random polyhedral approximation of strongly C-convex domains"};
  app.require_subcommand(1);

  auto* domain = app.add_subcommand("domain", "domain utilities");
  domain->require_subcommand(1);
  std::string domain_id;
  auto* info = domain->add_subcommand("info", "print measures and curvature of a domain");
  info->add_option("id", domain_id, "domain id, e.g. ball(2)")->required();

  auto* selftest = app.add_subcommand("selftest", "built-in checks");
  selftest->require_subcommand(1);
  auto* oracles = selftest->add_subcommand("oracles", "compare estimators with closed forms");

  std::string config, seed_hex, out_dir;
  int workers = 1;
  long mc_budget = 0;
  auto* coverage = app.add_subcommand("coverage", "containment frequency per constant and n");
  coverage->add_option("--config", config)->required();
  coverage->add_option("--workers", workers)->check(CLI::PositiveNumber);

  auto* experiment = app.add_subcommand("experiment", "replication experiments");
  experiment->require_subcommand(1);
  auto* run = experiment->add_subcommand("run", "run the configured grid");
  run->add_option("--config", config)->required();
  run->add_option("--seed", seed_hex, "master seed in hex");
  run->add_option("--workers", workers)->check(CLI::PositiveNumber);
  run->add_option("--mc-budget", mc_budget, "Monte Carlo budget per replication")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  std::string analyze_dir;
  auto* analyze = experiment->add_subcommand("analyze", "recompute summaries and plots");
  analyze->add_option("dir", analyze_dir)->required();

  auto* conjecture = app.add_subcommand("conjecture", "containment-threshold probe");
  std::string cdomain = "ball2";
  long cn = 20000;
  int creps = 50;
  double ctol = 0.05;
  conjecture->add_option("--domain", cdomain);
  conjecture->add_option("--n", cn)->check(CLI::Range(100L, 100000000L));
  conjecture->add_option("--reps", creps)->check(CLI::PositiveNumber);
  conjecture->add_option("--tol", ctol)->check(CLI::PositiveNumber);
  conjecture->add_option("--seed", seed_hex);
  conjecture->add_option("--workers", workers)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*info) return domain_info(domain_id);
    if (*oracles) return selftest_oracles();
    if (*coverage) return coverage_cmd(config, workers);
    if (*run) return experiment_run(config, seed_hex, workers, mc_budget, out_dir);
    if (*analyze) return experiment_analyze(analyze_dir);
    if (*conjecture) return conjecture_cmd(cdomain, cn, creps, ctol, seed_hex, workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CertificateError& e) {
    std::cerr << "certificate failure: " << e.what() << "\n";
    return kExitAudit;
  } catch (const NetConstructionError& e) {
    std::cerr << "net audit failure: " << e.what() << "\n";
    return kExitAudit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
