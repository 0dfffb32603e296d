#pragma once

#include <functional>
#include <string>

#include "ccvx/domains.hpp"
#include "ccvx/poly.hpp"

namespace ccvx {

struct VolumeEstimate {
  double value = 0;
  double se = 0;
  long n_samples = 0;
  std::string method;  // mc-shell | depth-integral | closed-form

  std::string to_json() const;
};

/// Unbiased hit-or-miss estimate of the union of cuts inside a certified shell.
VolumeEstimate union_cut_volume_mc(const PreparedSources& src, long budget, RngStream rng);

enum class Estimator { McShell, DepthIntegral };
std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& s);

/// Covered: the uncovered volume; not covered or uncertain: the full volume of D.
VolumeEstimate delta_v(const PreparedSources& src, const CoverageVerdict& coverage, long budget,
                       RngStream rng, Estimator method = Estimator::McShell);

/// sum_{j=0}^{J} (-1)^j / (j+1) r^{j+1} s_j.
double tube_integrand(const CurvatureData& c, double r, int terms_j);

/// sigma(bD) * mean of the tube integrand of `field` over uniform boundary points.
VolumeEstimate tube_volume_for_field(const Domain& dom,
                                     const std::function<std::vector<double>(
                                         const std::vector<CVec>&)>& field,
                                     long count, RngStream rng, int terms_j = -1);

/// Tube formula applied to the depth field r+ of the sources.
VolumeEstimate tubular_volume_depth_integral(const PreparedSources& src, long count,
                                             RngStream rng, int terms_j = -1);

/// kappa_{2d} (1 - (1 - c)^{2d}).
double sphere_tube_closed_form(int d, double c);

}  // namespace ccvx
