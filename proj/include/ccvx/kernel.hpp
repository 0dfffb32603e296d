#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "ccvx/rng.hpp"
#include "ccvx/types.hpp"

namespace ccvx {

enum class CatalogueTag { Ball, ModelQuadratic, AffineImage, Other };

std::string to_string(CatalogueTag tag);

/// Points are accepted as boundary points when |rho| is below this after projection.
inline constexpr double kBoundaryTol = 1e-10;
inline constexpr double kDegenerateGradient = 1e-12;

/// A boundary point drawn from a chart proposal, with its density relative to
/// surface measure (up to the domain's global weight bound).
struct BoundaryProposal {
  CVec point;
  double weight = 1.0;
};

/// Region certified to contain every cut whose level is at most the requested depth.
struct Shell {
  double volume = 0.0;
  std::function<CVec(RngStream&)> sample;
  std::function<bool(const CVec&)> contains;
};

/// A bounded strongly C-convex domain D = {rho < 0} described through its
/// defining function, derivatives and boundary parametrization.
///
/// Implementations are immutable after construction; every method is safe to
/// call concurrently.
class Domain {
 public:
  explicit Domain(int dim);
  virtual ~Domain() = default;
  Domain(const Domain&) = delete;
  Domain& operator=(const Domain&) = delete;

  int dim() const { return dim_; }

  virtual std::string id() const = 0;
  virtual CatalogueTag tag() const = 0;

  virtual double rho(const CVec& z) const = 0;
  /// Real gradient (d/dx1, d/dy1, ..., d/dxd, d/dyd).
  virtual RVec real_gradient(const CVec& z) const = 0;
  /// Real Hessian. The default uses central differences of the gradient with
  /// step 1e-5 * bounding radius.
  virtual RMat real_hessian(const CVec& z) const;
  virtual bool contains(const CVec& z) const { return rho(z) < 0.0; }

  virtual CVec center() const = 0;
  virtual double bounding_radius() const = 0;

  /// Chart proposal for boundary sampling. Accepting a proposal with
  /// probability weight / proposal_weight_bound() yields uniform surface measure.
  virtual BoundaryProposal propose_boundary(RngStream& rng) const = 0;
  virtual double proposal_weight_bound() const = 0;

  virtual double surface_area() const = 0;
  virtual double volume() const = 0;

  /// Certified region containing all cuts of level <= depth, when the domain
  /// knows one. Callers fall back to the bounding box otherwise.
  virtual std::optional<Shell> cut_shell(double depth) const;

  /// Uniform sample from D (rejection from the bounding box by default).
  virtual CVec sample_interior(RngStream& rng) const;

  /// Lower bound c for |L(z,w)| >= c |w - z|^2 used to size search radii.
  double convexity_margin() const;
  /// Quasi-triangle constant q: d(a,c) <= q (d(a,b) + d(b,c)), and d(a,b) <= q d(b,a).
  double quasimetric_constant() const;

 protected:
  virtual std::optional<double> exact_convexity_margin() const { return std::nullopt; }
  virtual std::optional<double> exact_quasimetric_constant() const { return std::nullopt; }

 private:
  int dim_;
  mutable std::once_flag margin_once_;
  mutable std::once_flag quasi_once_;
  mutable double margin_ = 0.0;
  mutable double quasi_ = 0.0;
};

using DomainPtr = std::shared_ptr<const Domain>;

// ---------------------------------------------------------------------------
// Differential primitives

/// Complex gradient d(rho) = (1/2)(d/dx - i d/dy), componentwise.
CVec complex_gradient(const Domain& dom, const CVec& z);

/// Second complex derivatives at z: rho_{jk} and rho_{j kbar}.
struct ComplexHessian {
  CMat holo;   // d^2 rho / dz_j dz_k
  CMat mixed;  // d^2 rho / dz_j dzbar_k
};
ComplexHessian complex_hessian(const Domain& dom, const CVec& z);

/// Newton steps along the gradient until |rho| is at round-off level.
CVec project_to_boundary(const Domain& dom, const CVec& z);

/// Uniform surface-measure sample on bD by rejection against the chart weight.
CVec sample_uniform_boundary(const Domain& dom, RngStream& rng);

// ---------------------------------------------------------------------------
// Boundary functional and friends

/// L(z,w) = <d rho(w), w - z> / |d rho(w)| with the bilinear pairing.
cplx boundary_functional(const Domain& dom, const CVec& z, const CVec& w);

/// Unit conormal d rho(w)/|d rho(w)|, so that L(z,w) = <n, w - z>.
CVec unit_conormal(const Domain& dom, const CVec& w);

CVec inner_normal(const Domain& dom, const CVec& w);

/// d(zeta, w) = |L(zeta, w)|^(1/2).
double quasimetric(const Domain& dom, const CVec& zeta, const CVec& w);

/// Complex-restricted curvature from the bordered determinant of first and
/// second complex derivatives.
double curvature_nu(const Domain& dom, const CVec& w);

// ---------------------------------------------------------------------------
// Linear fractional maps

class MoebiusMap {
 public:
  /// beta is (d+1)x(d+1); row/column 0 carry the denominator and translation.
  explicit MoebiusMap(CMat beta);

  static MoebiusMap identity(int d);
  static MoebiusMap affine(const CMat& a, const CVec& shift);

  int dim() const { return static_cast<int>(beta_.rows()) - 1; }
  const CMat& beta() const { return beta_; }

  cplx beta0(const CVec& z) const;
  CVec apply(const CVec& z) const;
  /// Holomorphic Jacobian dM_j/dz_k.
  CMat jacobian(const CVec& z) const;
  MoebiusMap inverse() const;

 private:
  CMat beta_;
};

/// |L_rho(z,w) - RHS| for the transformation law of L under a linear
/// fractional map, with d rho* obtained from the chain rule through M^{-1}.
double transform_law_residual(const Domain& dom, const MoebiusMap& m, const CVec& z,
                              const CVec& w);

/// |d rho*(M w)| / |d rho(w)| for rho* = rho o M^{-1}.
double transform_norm_ratio(const Domain& dom, const MoebiusMap& m, const CVec& w);

/// min |beta0| over boundary samples; the indeterminacy set misses closure(D)
/// when this stays away from zero.
double min_abs_beta0_on_boundary(const Domain& dom, const MoebiusMap& m, int samples,
                                 RngStream rng);

// ---------------------------------------------------------------------------
// Sampled constants

struct ConvexityMarginReport {
  double margin = 0.0;            // min |L| / |w - z|^2
  double max_linear_ratio = 0.0;  // max |L| / |w - z|
  bool nearly_degenerate = false;
};

ConvexityMarginReport strong_convexity_margin(const Domain& dom, int sample_count,
                                              Seed128 seed);

struct QuasimetricReport {
  double symmetry = 1.0;  // max d(a,b)/d(b,a)
  double triangle = 0.0;  // max d(a,c)/(d(a,b)+d(b,c))
  double constant() const { return std::max({1.0, symmetry, triangle}); }
};

QuasimetricReport measure_quasimetric(const Domain& dom, int triples, Seed128 seed);

}  // namespace ccvx
