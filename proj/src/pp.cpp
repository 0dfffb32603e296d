#include "ccvx/pp.hpp"

#include <cmath>

namespace ccvx {

std::pair<double, double> DensitySpec::raw_bounds(const Domain& dom) const {
  if (kind == Kind::Uniform) return {1.0, 1.0};
  const auto b = profile.bounds(dom);
  if (!(b.first > 0.0)) throw DensityPathologyError("density profile is not bounded away from 0");
  return b;
}

double DensitySpec::normalizer(const Domain& dom) const {
  const double area = dom.surface_area();
  if (kind == Kind::Uniform || profile.is_constant()) return raw(dom.center()) * area;
  if (dom.tag() == CatalogueTag::Ball) {
    // Re z1 and Im z1 integrate to zero on the sphere; |z1|^2 averages to 1/d.
    if (profile.phi == "abs_z1_sq") return (profile.c0 + profile.c1 / dom.dim()) * area;
    return profile.c0 * area;
  }
  RngStream rng(Seed128{0, 0x6e6f726dULL}, 0);
  const int samples = 200000;
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) sum += raw(sample_uniform_boundary(dom, rng));
  return area * sum / samples;
}

CVec sample_boundary_point(const Domain& dom, const DensitySpec& f, RngStream& rng) {
  if (f.kind == DensitySpec::Kind::Uniform) return sample_uniform_boundary(dom, rng);
  const double fmax = f.raw_bounds(dom).second;
  const double bound = dom.proposal_weight_bound() * fmax;
  for (long attempt = 1;; ++attempt) {
    const BoundaryProposal p = dom.propose_boundary(rng);
    const double weight = p.weight > 0.0 ? p.weight * f.raw(p.point) : 0.0;
    if (rng.uniform() * bound <= weight) return p.point;
    if (attempt >= 100000) throw DensityPathologyError("density acceptance rate below 1e-4");
  }
}

long poisson_count(double mean, RngStream& rng) {
  if (!(mean >= 0.0) || mean > 1e9) throw RangeError("Poisson mean must lie in [0, 1e9]");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double u = rng.uniform();
    double p = std::exp(-mean), cdf = p;
    long k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  // Hormann's PTRS.
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<long>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * log_mean - std::lgamma(k + 1.0))
      return static_cast<long>(k);
  }
}

SourceSample sample_process(const Domain& dom, const DensitySpec& f, Law law, long n,
                            const SizeFunction& size, RngStream rng) {
  if (n < 2) throw RangeError("process needs n >= 2");
  SourceSample s;
  s.law = law;
  s.n = n;
  s.seed = rng.seed();
  s.stream = rng.stream();
  long count = n;
  if (law == Law::Poisson) {
    RngStream counter = rng.derive(0x636f756e74ULL);
    count = poisson_count(static_cast<double>(n), counter);
  } else if (law != Law::Binomial) {
    throw RangeError("sample_process draws binomial or Poisson processes only");
  }
  s.points.reserve(static_cast<std::size_t>(count));
  s.sizes.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    s.points.push_back(sample_boundary_point(dom, f, rng));
    s.sizes.push_back(size_at(size, n, s.points.back()));
  }
  return s;
}

}  // namespace ccvx
