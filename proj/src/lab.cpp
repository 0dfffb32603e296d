#include "ccvx/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "ccvx/domains.hpp"

namespace ccvx {

std::uint64_t replication_stream(long n, int rep) {
  return mix64(mix64(static_cast<std::uint64_t>(n)) ^
               (static_cast<std::uint64_t>(rep) + 0x9E3779B97F4A7C15ULL));
}

namespace {

std::string error_tag(const std::exception& e) {
  if (dynamic_cast<const CertificateError*>(&e)) return "error-certificate";
  if (dynamic_cast<const NetConstructionError*>(&e)) return "error-net";
  if (dynamic_cast<const ExitThroughBoundaryError*>(&e)) return "error-exit";
  if (dynamic_cast<const DensityPathologyError*>(&e)) return "error-density";
  if (dynamic_cast<const DomainError*>(&e)) return "error-domain";
  return "error-numeric";
}

double scaled_factor(long n, int d) {
  const double nn = static_cast<double>(n);
  return std::pow(nn / std::log(nn), 1.0 / d);
}

/// Runs task(i) for i in [0, count) on `workers` threads; `done(i)` is called
/// in index order under a lock as soon as the prefix up to i is complete.
template <class Task, class Done>
void ordered_pool(std::size_t count, int workers, Task&& task, Done&& done) {
  std::atomic<std::size_t> next{0};
  std::vector<char> ready(count, 0);
  std::size_t emitted = 0;
  std::mutex mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
      std::lock_guard<std::mutex> lock(mu);
      ready[i] = 1;
      while (emitted < count && ready[emitted]) done(emitted++);
    }
  };
  const int k = std::max(1, workers);
  std::vector<std::thread> threads;
  for (int t = 1; t < k; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ReplicationRecord run_replication(const ExperimentConfig& cfg, const Domain& dom, long n,
                                  int rep) {
  const auto t0 = std::chrono::steady_clock::now();
  ReplicationRecord rec;
  rec.n = n;
  rec.rep = rep;
  const RngStream root(cfg.seed, replication_stream(n, rep));
  try {
    const SourceSample s = sample_process(dom, cfg.density, cfg.law, n, cfg.size, root.derive(1));
    rec.points = static_cast<long>(s.size());
    const PreparedSources src(dom, s);
    CoverageOptions opt;
    opt.net_factor = cfg.net_factor;
    const CoverageVerdict v = coverage_test(src, cfg.seed, opt);
    const VolumeEstimate est = delta_v(src, v, cfg.mc_budget, root.derive(2), cfg.estimator);
    rec.verdict = to_string(v.status);
    rec.delta_v = est.value;
    rec.se = est.se;
    rec.scaled = est.value * scaled_factor(n, dom.dim());
  } catch (const Error& e) {
    rec.verdict = error_tag(e);
  }
  if (cfg.timing) {
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                 .count();
  }
  return rec;
}

std::vector<ReplicationRecord> run_experiment(
    const ExperimentConfig& cfg, int workers,
    const std::function<void(const ReplicationRecord&)>& sink) {
  cfg.validate();
  const DomainPtr dom = make_domain(cfg.domain);
  std::vector<std::pair<long, int>> tasks;
  for (long n : cfg.n_grid)
    for (int r = 0; r < cfg.replications; ++r) tasks.emplace_back(n, r);
  std::vector<ReplicationRecord> out(tasks.size());
  ordered_pool(
      tasks.size(), workers,
      [&](std::size_t i) { out[i] = run_replication(cfg, *dom, tasks[i].first, tasks[i].second); },
      [&](std::size_t i) {
        if (sink) sink(out[i]);
      });
  return out;
}

// ---------------------------------------------------------------------------

double ks_normal(std::vector<double> x) {
  if (x.empty()) throw RangeError("KS needs data");
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> nd;
  const double m = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = boost::math::cdf(nd, x[i]);
    d = std::max({d, (i + 1) / m - f, f - i / m});
  }
  return d;
}

double w1_normal(std::vector<double> x) {
  if (x.empty()) throw RangeError("W1 needs data");
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> nd;
  const double m = static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    s += std::abs(x[i] - boost::math::quantile(nd, (i + 0.5) / m));
  return s / m;
}

std::vector<SummaryRecord> summarize(const std::vector<ReplicationRecord>& records) {
  std::vector<long> ns;
  for (const auto& r : records)
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  std::sort(ns.begin(), ns.end());
  std::vector<SummaryRecord> out;
  for (long n : ns) {
    std::vector<double> v, sc;
    double se2 = 0.0;
    int covered = 0;
    for (const auto& r : records) {
      if (r.n != n || !r.ok()) continue;
      v.push_back(r.delta_v);
      sc.push_back(r.scaled);
      se2 += r.se * r.se;
      covered += r.verdict == "covered" ? 1 : 0;
    }
    SummaryRecord s;
    s.n = n;
    s.count = static_cast<int>(v.size());
    if (v.empty()) {
      out.push_back(s);
      continue;
    }
    const double m = static_cast<double>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / m;
    s.scaled_mean = std::accumulate(sc.begin(), sc.end(), 0.0) / m;
    s.cover_freq = covered / m;
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.var = ss / (m - 1.0);
      s.mc_var = se2 / m;
      s.var_corrected = *s.var - *s.mc_var;
      if (v.size() >= 30 && *s.var > 0.0) {
        const double sd = std::sqrt(*s.var);
        std::vector<double> z;
        for (double x : v) z.push_back((x - s.mean) / sd);
        s.ks = ks_normal(z);
        s.w1 = w1_normal(z);
      }
    }
    out.push_back(s);
  }
  return out;
}

RateFit fit_rate(const std::vector<double>& ns, const std::vector<double>& values,
                 double power) {
  if (ns.size() != values.size() || ns.size() < 3) throw RangeError("rate fit needs >= 3 points");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(values[i] > 0.0) || !(ns[i] > 1.0)) throw RangeError("rate fit needs positive values");
    x.push_back(std::log(ns[i]));
    y.push_back(std::log(values[i]) - power * std::log(std::log(ns[i])));
  }
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw RangeError("rate fit needs distinct n values");
  RateFit f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// ---------------------------------------------------------------------------

namespace {

// Covered flags for constants cs at (n, rep); the point sample does not depend on c.
std::vector<CoverageStatus> coverage_for_constants(const Domain& dom, const DensitySpec& f,
                                                   Law law, long n, int rep, Seed128 seed,
                                                   double net_factor,
                                                   const std::vector<double>& cs) {
  const RngStream root(seed, replication_stream(n, rep));
  SourceSample s = sample_process(dom, f, law, n, SizeFunction{}, root.derive(1));
  const double scale = SizeFunction::scale(n, dom.dim());
  std::vector<CoverageStatus> out;
  CoverageOptions opt;
  opt.net_factor = net_factor;
  for (double c : cs) {
    for (double& x : s.sizes) x = c * scale;
    const PreparedSources src(dom, s);
    out.push_back(coverage_test(src, seed, opt).status);
  }
  return out;
}

}  // namespace

std::vector<CoverageRow> coverage_probability_curve(const ExperimentConfig& cfg,
                                                    const std::vector<double>& cs,
                                                    int workers) {
  cfg.validate();
  for (double c : cs)
    if (!(c > 0.0)) throw RangeError("coverage constants must be positive");
  const DomainPtr dom = make_domain(cfg.domain);
  std::vector<std::pair<long, int>> tasks;
  for (long n : cfg.n_grid)
    for (int r = 0; r < cfg.replications; ++r) tasks.emplace_back(n, r);
  std::vector<std::vector<CoverageStatus>> res(tasks.size());
  ordered_pool(
      tasks.size(), workers,
      [&](std::size_t i) {
        res[i] = coverage_for_constants(*dom, cfg.density, cfg.law, tasks[i].first,
                                        tasks[i].second, cfg.seed, cfg.net_factor, cs);
      },
      [](std::size_t) {});
  std::vector<CoverageRow> rows;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    for (long n : cfg.n_grid) {
      CoverageRow row{cs[k], n, 0, 0.0, 0};
      int covered = 0;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].first != n) continue;
        ++row.reps;
        covered += res[i][k] == CoverageStatus::Covered ? 1 : 0;
        row.uncertain += res[i][k] == CoverageStatus::Uncertain ? 1 : 0;
      }
      row.freq = row.reps ? static_cast<double>(covered) / row.reps : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

double conjectured_constant(const Domain& dom, const DensitySpec& f, long points) {
  const int d = dom.dim();
  const auto c = constants(d);
  RngStream rng(Seed128{0, 0x636f6e6aULL}, 0);
  const double z = f.normalizer(dom);
  double sum = 0.0;
  for (long i = 0; i < points; ++i) {
    const CVec w = sample_uniform_boundary(dom, rng);
    const double nu = curvature_nu(dom, w);
    sum += std::pow(16.0 * nu, 1.0 / (2 * d)) / std::pow(f.raw(w) / z, 1.0 / d);
  }
  return std::pow(c.h_d * c.kappa_2d_minus_2, -1.0 / d) * dom.surface_area() * sum /
         static_cast<double>(points);
}

ConjectureReport conjecture_probe(const Domain& dom, const DensitySpec& f, long n, int reps,
                                  double tolerance, Seed128 seed, int workers, double lo,
                                  double hi) {
  if (dom.tag() != CatalogueTag::Ball && dom.tag() != CatalogueTag::ModelQuadratic)
    throw RangeError("conjecture probe needs a ball or model domain");
  if (!(tolerance > 0.0) || reps < 1) throw RangeError("conjecture probe needs tolerance > 0");
  ConjectureReport rep;
  auto freq = [&](double c) {
    std::vector<char> covered(static_cast<std::size_t>(reps), 0);
    ordered_pool(
        covered.size(), workers,
        [&](std::size_t r) {
          covered[r] = coverage_for_constants(dom, f, Law::Poisson, n, static_cast<int>(r), seed,
                                              0.25, {c})[0] == CoverageStatus::Covered;
        },
        [](std::size_t) {});
    const double fr = std::accumulate(covered.begin(), covered.end(), 0.0) / reps;
    rep.scanned.emplace_back(c, fr);
    return fr;
  };
  if (freq(lo) >= 0.5 || freq(hi) < 0.5) {
    std::string msg = "containment threshold not bracketed:";
    for (const auto& [c, fr] : rep.scanned) msg += " c=" + std::to_string(c) + " freq=" + std::to_string(fr);
    throw BracketError(msg);
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (freq(mid) >= 0.5 ? hi : lo) = mid;
  }
  rep.c_star = 0.5 * (lo + hi);
  rep.candidate = rep.c_star * dom.surface_area();
  rep.conjectured = conjectured_constant(dom, f);
  rep.ratio = rep.candidate / rep.conjectured;
  return rep;
}

}  // namespace ccvx
