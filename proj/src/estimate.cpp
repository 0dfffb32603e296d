#include "ccvx/estimate.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace ccvx {

std::string VolumeEstimate::to_json() const {
  nlohmann::json j;
  j["value"] = value;
  j["se"] = se;
  j["n_samples"] = n_samples;
  j["method"] = method;
  return j.dump();
}

std::string to_string(Estimator e) {
  return e == Estimator::McShell ? "mc-shell" : "depth-integral";
}

Estimator parse_estimator(const std::string& s) {
  if (s == "mc-shell") return Estimator::McShell;
  if (s == "depth-integral") return Estimator::DepthIntegral;
  throw ConfigError("unknown estimator: " + s);
}

namespace {

Shell bounding_box_shell(const Domain& dom) {
  const CVec c = dom.center();
  const double r = dom.bounding_radius();
  const int d = dom.dim();
  Shell s;
  s.volume = std::pow(2.0 * r, 2 * d);
  s.sample = [c, r, d](RngStream& rng) {
    CVec z(d);
    for (int j = 0; j < d; ++j)
      z[j] = c[j] + r * cplx(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    return z;
  };
  s.contains = [](const CVec&) { return true; };
  return s;
}

// Points of the union of cuts, drawn near random sources, all of which must lie in the shell.
void audit_shell(const PreparedSources& src, const Shell& shell, RngStream rng) {
  const Domain& dom = src.domain();
  const int d = dom.dim();
  int found = 0;
  for (long attempt = 0; attempt < 200000 && found < 1000; ++attempt) {
    const int i = static_cast<int>(rng.uniform() * src.size()) % src.size();
    const double r = src.search_radius(src.delta(i));
    CVec v(d);
    for (int j = 0; j < d; ++j) v[j] = cplx(rng.normal(), rng.normal());
    const CVec z = src.point(i) + (r * std::pow(rng.uniform(), 1.0 / (2 * d)) / v.norm()) * v;
    if (!dom.contains(z) || std::abs(src.L(i, z)) >= src.delta(i)) continue;
    ++found;
    if (!shell.contains(z)) throw CertificateError("a cut point lies outside the certified shell");
  }
}

}  // namespace

VolumeEstimate union_cut_volume_mc(const PreparedSources& src, long budget, RngStream rng) {
  VolumeEstimate est;
  est.method = "mc-shell";
  if (src.empty()) return est;
  if (budget < 1) throw RangeError("Monte Carlo budget must be positive");
  const Domain& dom = src.domain();
  Shell shell = dom.cut_shell(src.delta_max()).value_or(bounding_box_shell(dom));
  audit_shell(src, shell, rng.derive(0x61756469740000ULL));

  const double reach = src.search_radius(src.delta_max());
  const long chunk = 1 << 20;
  long hits = 0;
  std::vector<CVec> pts;
  for (long start = 0, k = 0; start < budget; start += chunk, ++k) {
    RngStream local = rng.derive(static_cast<std::uint64_t>(k));
    const long m = std::min(chunk, budget - start);
    pts.resize(static_cast<std::size_t>(m));
    for (auto& z : pts) z = shell.sample(local);
    src.index().batch(pts, reach, [&](int, const CVec& z, auto cands, double off) {
      if (!dom.contains(z)) return;
      for (const auto& c : cands) {
        if (c.center_distance > reach + off) break;
        if (std::abs(src.L(c.index, z)) < src.delta(c.index)) {
          ++hits;
          return;
        }
      }
    });
  }
  const double p = static_cast<double>(hits) / static_cast<double>(budget);
  est.value = shell.volume * p;
  est.se = shell.volume * std::sqrt(p * (1.0 - p) / static_cast<double>(budget));
  est.n_samples = budget;
  return est;
}

VolumeEstimate delta_v(const PreparedSources& src, const CoverageVerdict& coverage, long budget,
                       RngStream rng, Estimator method) {
  if (coverage.status != CoverageStatus::Covered) {
    VolumeEstimate est;
    est.value = src.domain().volume();
    est.method = "closed-form";
    return est;
  }
  if (method == Estimator::DepthIntegral) return tubular_volume_depth_integral(src, budget, rng);
  return union_cut_volume_mc(src, budget, rng);
}

double tube_integrand(const CurvatureData& c, double r, int terms_j) {
  double sum = 0.0, power = r;
  for (int j = 0; j <= terms_j; ++j) {
    sum += ((j % 2) ? -1.0 : 1.0) / (j + 1) * power * c.at(j);
    power *= r;
  }
  return sum;
}

VolumeEstimate tube_volume_for_field(
    const Domain& dom, const std::function<std::vector<double>(const std::vector<CVec>&)>& field,
    long count, RngStream rng, int terms_j) {
  if (count < 2) throw RangeError("tube estimate needs at least 2 boundary points");
  const int d = dom.dim();
  if (terms_j < 0) terms_j = 2 * d - 1;
  if (terms_j > 2 * d - 1) throw RangeError("tube formula has at most 2d-1 curvature terms");
  VolumeEstimate est;
  est.method = "depth-integral";
  est.n_samples = count;

  // On the ball every boundary point has the same curvature data.
  std::optional<CurvatureData> fixed;
  if (dom.tag() == CatalogueTag::Ball) {
    CVec e = CVec::Zero(d);
    e[0] = 1.0;
    fixed = curvature_polys(dom, e);
  }

  const long chunk = 1 << 15;
  double sum = 0.0, sum2 = 0.0;
  std::vector<CVec> pts;
  for (long start = 0, k = 0; start < count; start += chunk, ++k) {
    RngStream local = rng.derive(static_cast<std::uint64_t>(k));
    pts.resize(static_cast<std::size_t>(std::min(chunk, count - start)));
    for (auto& z : pts) z = sample_uniform_boundary(dom, local);
    const std::vector<double> r = field(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (r[i] <= 0.0) continue;
      const double v = tube_integrand(fixed ? *fixed : curvature_polys(dom, pts[i]), r[i], terms_j);
      sum += v;
      sum2 += v * v;
    }
  }
  const double n = static_cast<double>(count);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 / n - mean * mean) * n / (n - 1.0));
  const double area = dom.surface_area();
  est.value = area * mean;
  est.se = area * std::sqrt(var / n);
  return est;
}

VolumeEstimate tubular_volume_depth_integral(const PreparedSources& src, long count,
                                             RngStream rng, int terms_j) {
  if (src.empty()) {
    VolumeEstimate est;
    est.method = "depth-integral";
    est.n_samples = count;
    return est;
  }
  return tube_volume_for_field(
      src.domain(), [&src](const std::vector<CVec>& z) { return max_depth_field_batch(src, z); },
      count, rng, terms_j);
}

double sphere_tube_closed_form(int d, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw RangeError("sphere tube needs c in [0, 1]");
  return kappa(2 * d) * (1.0 - std::pow(1.0 - c, 2 * d));
}

}  // namespace ccvx
