#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccvx/grid.hpp"
#include "ccvx/kernel.hpp"

namespace ccvx {

/// c0 + c1 * phi(w) for a catalogued smooth phi ("re_z1", "im_z1", "abs_z1_sq").
struct Profile {
  double c0 = 1.0;
  double c1 = 0.0;
  std::string phi = "re_z1";

  static Profile constant(double c) { return {c, 0.0, "re_z1"}; }
  bool is_constant() const { return c1 == 0.0; }
  double operator()(const CVec& w) const;
  /// Bounds over bD derived from the domain's bounding ball.
  std::pair<double, double> bounds(const Domain& dom) const;
};

double eval_phi(const std::string& phi, const CVec& w);

struct SizeFunction {
  Profile g;
  double holder_alpha = 1.0;

  /// (log n / n)^{1/d}.
  static double scale(long n, int d);
};

/// g(w) (log n / n)^{1/d}.
double size_at(const SizeFunction& s, long n, const CVec& w);

enum class Law { Binomial, Poisson, Explicit };
std::string to_string(Law law);
Law parse_law(const std::string& s);

struct SourceSample {
  std::vector<CVec> points;
  std::vector<double> sizes;
  Law law = Law::Explicit;
  long n = 0;
  Seed128 seed{};
  std::uint64_t stream = 0;

  std::size_t size() const { return points.size(); }
};

/// Sources with their conormals cached so L(z, w_i) = c_i - <n_i, z>, plus a
/// spatial index whose radius sqrt(delta_max / c) certifies cap candidates.
class PreparedSources {
 public:
  PreparedSources(const Domain& dom, const SourceSample& s);

  const Domain& domain() const { return *dom_; }
  int size() const { return static_cast<int>(points_.size()); }
  bool empty() const { return points_.empty(); }
  int dim() const { return d_; }

  cplx L(int i, const CVec& z) const {
    const cplx* n = &normals_[static_cast<std::size_t>(i) * d_];
    cplx s = offsets_[i];
    for (int j = 0; j < d_; ++j) s -= n[j] * z[j];
    return s;
  }
  /// <n_i, v> for a direction v.
  cplx pair(int i, const CVec& v) const {
    const cplx* n = &normals_[static_cast<std::size_t>(i) * d_];
    cplx s = 0;
    for (int j = 0; j < d_; ++j) s += n[j] * v[j];
    return s;
  }
  double delta(int i) const { return sizes_[i]; }
  const CVec& point(int i) const { return points_[i]; }
  double delta_max() const { return delta_max_; }
  double delta_min() const { return delta_min_; }

  /// Euclidean radius guaranteeing |L(z,w)| < level implies |w - z| <= radius.
  double search_radius(double level) const;
  const SpatialIndex& index() const { return index_; }

 private:
  const Domain* dom_;
  int d_;
  std::vector<CVec> points_;
  std::vector<cplx> normals_;
  std::vector<cplx> offsets_;
  std::vector<double> sizes_;
  double delta_max_ = 0, delta_min_ = 0, margin_ = 0;
  SpatialIndex index_;
};

// ---------------------------------------------------------------------------

/// z in D and |L(z,w)| < delta.
bool cut_membership(const Domain& dom, const CVec& z, const CVec& w, double delta);

/// Length of the inner normal segment from zeta that stays in C(w; delta);
/// none when zeta is outside the cap S(w; delta).
std::optional<double> depth_along_normal(const Domain& dom, const CVec& zeta, const CVec& w,
                                         double delta);

/// Same computation from precomputed pieces: a = L(zeta, w), b = <n_w, eta(zeta)>.
std::optional<double> depth_from_pair(cplx a, cplx b, double delta);

/// max(0, max_i depth of C(w_i; delta_i) at zeta).
double max_depth_field(const PreparedSources& src, const CVec& zeta);

/// Field values for many boundary points at once.
std::vector<double> max_depth_field_batch(const PreparedSources& src,
                                          const std::vector<CVec>& zetas);

/// w in G_{t delta(w)}(zeta): the cut at w reaches depth t delta(w) below zeta.
bool visibility_membership(const Domain& dom, const CVec& w, const CVec& zeta,
                           const SizeFunction& s, long n, double t);

// ---------------------------------------------------------------------------

struct BoundaryNet {
  std::vector<CVec> centers;
  double rho_net = 0;         // every boundary point is within rho_net of a center
  double packing_radius = 0;  // caps of this quasimetric radius are pairwise disjoint
  long stream_samples = 0;
};

struct NetOptions {
  double packing_factor = 0.9;  // centers are pairwise farther apart than this * rho_net
  int rejection_factor = 50;    // stop after factor * m consecutive covered draws
  int audit_points = 100000;
  int max_attempts = 3;  // retries with a doubled rejection factor
};

/// Greedy maximal packing in the quasimetric, audited for covering.
BoundaryNet build_net(const Domain& dom, double rho_net, Seed128 seed, NetOptions opt = {});

/// Nets are shared across replications: keyed by domain id, a geometric ladder of
/// radii (rounded down, so always at least as fine as requested) and seed.
std::shared_ptr<const BoundaryNet> cached_net(const Domain& dom, double rho_net, Seed128 seed);
/// Drops every cached net (the cache otherwise lives for the whole process).
void clear_net_cache();

enum class CoverageStatus { Covered, NotCovered, Uncertain };
std::string to_string(CoverageStatus s);

struct CoverageVerdict {
  CoverageStatus status = CoverageStatus::NotCovered;
  double uncertain_fraction = 0;
  std::vector<CVec> witnesses;
  long net_size = 0;
  long band = 0;  // net points refined locally
  std::string to_json() const;
};

struct CoverageOptions {
  double net_factor = 0.25;
  int refine_levels = 8;
  int refine_points = 64;
  int refine_rejection_factor = 4;
  int probes = 2000;
};

/// Decides whether the caps S(w; delta(w)) cover bD, i.e. whether the induced
/// polyhedron lies in D.
CoverageVerdict coverage_test(const PreparedSources& src, Seed128 seed, CoverageOptions opt = {});

/// Brute-force check: returns the number of points not covered by any cap.
long uncovered_count(const PreparedSources& src, const std::vector<CVec>& boundary_points);

}  // namespace ccvx
