#pragma once

#include <string>

#include "ccvx/poly.hpp"

namespace ccvx {

/// Boundary density relative to surface measure: uniform, or proportional to a
/// positive profile c0 + c1 phi(w).
struct DensitySpec {
  enum class Kind { Uniform, Profile };
  Kind kind = Kind::Uniform;
  Profile profile;

  static DensitySpec uniform() { return {}; }
  static DensitySpec from_profile(Profile p) { return {Kind::Profile, std::move(p)}; }

  /// Unnormalized value; 1 for the uniform density.
  double raw(const CVec& w) const { return kind == Kind::Uniform ? 1.0 : profile(w); }
  /// Upper and lower bounds of raw() over bD. Throws if the profile is not positive.
  std::pair<double, double> raw_bounds(const Domain& dom) const;
  /// int raw dsigma over bD (closed form on the ball, Monte Carlo otherwise).
  double normalizer(const Domain& dom) const;
  /// Normalized density f(w).
  double operator()(const Domain& dom, const CVec& w) const { return raw(w) / normalizer(dom); }
};

/// One boundary point from f dsigma.
CVec sample_boundary_point(const Domain& dom, const DensitySpec& f, RngStream& rng);

/// Poisson variate: inversion below mean 30, transformed rejection (PTRS) above.
long poisson_count(double mean, RngStream& rng);

SourceSample sample_process(const Domain& dom, const DensitySpec& f, Law law, long n,
                            const SizeFunction& size, RngStream rng);

}  // namespace ccvx
