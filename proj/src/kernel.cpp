#include "ccvx/kernel.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace ccvx {

std::string to_string(CatalogueTag tag) {
  switch (tag) {
    case CatalogueTag::Ball: return "ball";
    case CatalogueTag::ModelQuadratic: return "model-quadratic";
    case CatalogueTag::AffineImage: return "affine-image";
    case CatalogueTag::Other: return "other";
  }
  return "other";
}

Domain::Domain(int dim) : dim_(dim) {
  if (dim < 2 || dim > kMaxDim) throw RangeError("domain dimension must be in [2, 8]");
}

RMat Domain::real_hessian(const CVec& z) const {
  const int n = 2 * dim_;
  const double h = 1e-5 * bounding_radius();
  RVec x = to_real(z);
  RMat hess(n, n);
  for (int k = 0; k < n; ++k) {
    RVec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    hess.col(k) = (real_gradient(to_complex(xp)) - real_gradient(to_complex(xm))) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

std::optional<Shell> Domain::cut_shell(double) const { return std::nullopt; }

CVec Domain::sample_interior(RngStream& rng) const {
  const CVec c = center();
  const double r = bounding_radius();
  for (int attempt = 0; attempt < 10'000'000; ++attempt) {
    CVec z(dim_);
    for (int j = 0; j < dim_; ++j)
      z[j] = c[j] + r * cplx(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    if (contains(z)) return z;
  }
  throw DensityPathologyError("interior rejection sampler never accepted");
}

double Domain::convexity_margin() const {
  std::call_once(margin_once_, [this] {
    if (auto exact = exact_convexity_margin()) {
      margin_ = *exact;
    } else {
      // Halved for safety: the sampled minimum only approaches the infimum from above.
      margin_ = 0.5 * strong_convexity_margin(*this, 20000, Seed128{0, 0x6d617267696eULL}).margin;
    }
  });
  return margin_;
}

double Domain::quasimetric_constant() const {
  std::call_once(quasi_once_, [this] {
    if (auto exact = exact_quasimetric_constant()) {
      quasi_ = *exact;
    } else {
      quasi_ = measure_quasimetric(*this, 20000, Seed128{0, 0x7175617369ULL}).constant();
    }
  });
  return quasi_;
}

// ---------------------------------------------------------------------------

CVec complex_gradient(const Domain& dom, const CVec& z) {
  const RVec g = dom.real_gradient(z);
  CVec out(dom.dim());
  for (int j = 0; j < dom.dim(); ++j) out[j] = 0.5 * cplx(g[2 * j], -g[2 * j + 1]);
  return out;
}

ComplexHessian complex_hessian(const Domain& dom, const CVec& z) {
  const int d = dom.dim();
  const RMat h = dom.real_hessian(z);
  ComplexHessian out{CMat(d, d), CMat(d, d)};
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      const double xx = h(2 * j, 2 * k), yy = h(2 * j + 1, 2 * k + 1);
      const double xy = h(2 * j, 2 * k + 1), yx = h(2 * j + 1, 2 * k);
      out.holo(j, k) = 0.25 * cplx(xx - yy, -(xy + yx));
      out.mixed(j, k) = 0.25 * cplx(xx + yy, xy - yx);
    }
  }
  return out;
}

CVec project_to_boundary(const Domain& dom, const CVec& z) {
  RVec x = to_real(z);
  for (int step = 0; step < 30; ++step) {
    const CVec p = to_complex(x);
    const double r = dom.rho(p);
    if (std::abs(r) < 1e-15) break;
    const RVec g = dom.real_gradient(p);
    const double gg = g.squaredNorm();
    if (gg < kDegenerateGradient * kDegenerateGradient)
      throw GradientDegenerateError("gradient vanishes during boundary projection");
    const RVec next = x - (r / gg) * g;
    if ((next - x).norm() < 1e-17 * (1.0 + x.norm())) break;
    x = next;
  }
  return to_complex(x);
}

CVec sample_uniform_boundary(const Domain& dom, RngStream& rng) {
  const double bound = dom.proposal_weight_bound();
  long attempts = 0;
  for (;;) {
    BoundaryProposal p = dom.propose_boundary(rng);
    ++attempts;
    if (rng.uniform() * bound <= p.weight) return p.point;
    // 10^5 straight rejections put the acceptance rate well below 1e-4.
    if (attempts >= 100000) throw DensityPathologyError("boundary proposal acceptance rate below 1e-4");
  }
}

// ---------------------------------------------------------------------------

namespace {

void require_boundary(const Domain& dom, const CVec& w) {
  if (std::abs(dom.rho(w)) > kBoundaryTol)
    throw DomainError("point is not on the boundary within tolerance");
}

}  // namespace

CVec unit_conormal(const Domain& dom, const CVec& w) {
  require_boundary(dom, w);
  const CVec g = complex_gradient(dom, w);
  const double n = g.norm();
  if (n < kDegenerateGradient) throw GradientDegenerateError("complex gradient vanishes");
  return g / n;
}

cplx boundary_functional(const Domain& dom, const CVec& z, const CVec& w) {
  return bilinear(unit_conormal(dom, w), w - z);
}

CVec inner_normal(const Domain& dom, const CVec& w) {
  require_boundary(dom, w);
  const RVec g = dom.real_gradient(w);
  const double n = g.norm();
  if (n < kDegenerateGradient) throw GradientDegenerateError("gradient vanishes");
  return to_complex(-g / n);
}

double quasimetric(const Domain& dom, const CVec& zeta, const CVec& w) {
  require_boundary(dom, zeta);
  return std::sqrt(std::abs(boundary_functional(dom, zeta, w)));
}

double curvature_nu(const Domain& dom, const CVec& w) {
  const int d = dom.dim();
  const CVec g = complex_gradient(dom, w);
  const ComplexHessian h = complex_hessian(dom, w);
  const double grad_norm = dom.real_gradient(w).norm();
  if (grad_norm < kDegenerateGradient) throw GradientDegenerateError("gradient vanishes");

  // Row/column order: (border, border-bar, z_1..z_d, zbar_1..zbar_d).
  const int n = 2 * d + 2;
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < d; ++k) {
    q(0, 2 + k) = g[k];
    q(1, 2 + d + k) = std::conj(g[k]);
    q(2 + k, 0) = g[k];
    q(2 + d + k, 1) = std::conj(g[k]);
  }
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      q(2 + j, 2 + k) = h.holo(j, k);
      q(2 + j, 2 + d + k) = h.mixed(j, k);
      q(2 + d + j, 2 + k) = std::conj(h.mixed(j, k));
      q(2 + d + j, 2 + d + k) = std::conj(h.holo(j, k));
    }
  }
  const cplx det = q.partialPivLu().determinant();
  const double sign = (d % 2 == 0) ? -1.0 : 1.0;  // (-1)^{d+1}
  const double value = sign * det.real() / std::pow(grad_norm, 2 * d + 2);
  if (!std::isfinite(value)) throw NumericError("curvature determinant is not finite");
  if (value <= 0.0) throw CurvatureSignError("complex-restricted curvature is not positive");
  return value;
}

// ---------------------------------------------------------------------------

MoebiusMap::MoebiusMap(CMat beta) : beta_(std::move(beta)) {
  if (beta_.rows() != beta_.cols() || beta_.rows() < 3)
    throw RangeError("Moebius matrix must be square of size d+1 >= 3");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd{Eigen::MatrixXcd(beta_)};
  const auto& s = svd.singularValues();
  if (!(s[s.size() - 1] > 1e-14 * s[0])) throw NumericError("Moebius matrix is singular");
}

MoebiusMap MoebiusMap::identity(int d) { return MoebiusMap(CMat::Identity(d + 1, d + 1)); }

MoebiusMap MoebiusMap::affine(const CMat& a, const CVec& shift) {
  const int d = static_cast<int>(a.rows());
  CMat b = CMat::Zero(d + 1, d + 1);
  b(0, 0) = 1.0;
  b.block(1, 0, d, 1) = shift;
  b.block(1, 1, d, d) = a;
  return MoebiusMap(b);
}

cplx MoebiusMap::beta0(const CVec& z) const {
  cplx s = beta_(0, 0);
  for (int k = 0; k < dim(); ++k) s += beta_(0, k + 1) * z[k];
  return s;
}

CVec MoebiusMap::apply(const CVec& z) const {
  const cplx b0 = beta0(z);
  if (std::abs(b0) <= 1e-12) throw IndeterminacyError("point lies on the indeterminacy set");
  const int d = dim();
  CVec out(d);
  for (int j = 0; j < d; ++j) {
    cplx s = beta_(j + 1, 0);
    for (int k = 0; k < d; ++k) s += beta_(j + 1, k + 1) * z[k];
    out[j] = s / b0;
  }
  return out;
}

CMat MoebiusMap::jacobian(const CVec& z) const {
  const cplx b0 = beta0(z);
  const CVec mz = apply(z);
  const int d = dim();
  CMat j(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) j(r, c) = (beta_(r + 1, c + 1) - mz[r] * beta_(0, c + 1)) / b0;
  return j;
}

MoebiusMap MoebiusMap::inverse() const { return MoebiusMap(CMat(beta_.inverse())); }

namespace {

// d rho* at M w, as a vector, through the Jacobian of the inverse map.
CVec pushed_gradient(const Domain& dom, const MoebiusMap& m, const CVec& w, const CVec& mw) {
  const CVec g = complex_gradient(dom, w);
  const CMat jinv = m.inverse().jacobian(mw);
  const int d = dom.dim();
  CVec out(d);
  for (int k = 0; k < d; ++k) {
    cplx s = 0;
    for (int j = 0; j < d; ++j) s += g[j] * jinv(j, k);
    out[k] = s;
  }
  return out;
}

}  // namespace

double transform_law_residual(const Domain& dom, const MoebiusMap& m, const CVec& z,
                              const CVec& w) {
  const cplx lhs = boundary_functional(dom, z, w);
  const cplx b0z = m.beta0(z), b0w = m.beta0(w);
  const CVec mz = m.apply(z), mw = m.apply(w);
  const CVec gstar = pushed_gradient(dom, m, w, mw);
  const double nstar = gstar.norm();
  const double n = complex_gradient(dom, w).norm();
  const cplx lstar = bilinear(gstar / nstar, mw - mz);
  const cplx rhs = (nstar / n) * (b0z / b0w) * lstar;
  return std::abs(lhs - rhs);
}

double transform_norm_ratio(const Domain& dom, const MoebiusMap& m, const CVec& w) {
  const CVec mw = m.apply(w);
  return pushed_gradient(dom, m, w, mw).norm() / complex_gradient(dom, w).norm();
}

double min_abs_beta0_on_boundary(const Domain& dom, const MoebiusMap& m, int samples,
                                 RngStream rng) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i)
    best = std::min(best, std::abs(m.beta0(sample_uniform_boundary(dom, rng))));
  return best;
}

// ---------------------------------------------------------------------------

namespace {

CVec random_direction(int d, RngStream& rng) {
  CVec v(d);
  for (int j = 0; j < d; ++j) v[j] = cplx(rng.normal(), rng.normal());
  return v / v.norm();
}

// Boundary point near w at a log-uniform scale.
CVec nearby_boundary(const Domain& dom, const CVec& w, RngStream& rng) {
  const double scale = dom.bounding_radius() * std::pow(10.0, -3.0 * rng.uniform());
  return project_to_boundary(dom, w + scale * random_direction(dom.dim(), rng));
}

}  // namespace

ConvexityMarginReport strong_convexity_margin(const Domain& dom, int sample_count,
                                              Seed128 seed) {
  if (sample_count < 1000) throw RangeError("strong_convexity_margin needs >= 1000 samples");
  RngStream rng(seed, 0x636f6e76ULL);
  ConvexityMarginReport rep;
  rep.margin = std::numeric_limits<double>::infinity();
  const double tiny = 1e-9 * dom.bounding_radius();
  for (int i = 0; i < sample_count; ++i) {
    const CVec w = sample_uniform_boundary(dom, rng);
    CVec z;
    switch (i % 4) {
      case 0: z = dom.sample_interior(rng); break;
      case 1: z = sample_uniform_boundary(dom, rng); break;
      case 2: z = nearby_boundary(dom, w, rng); break;
      default: {
        const double scale = dom.bounding_radius() * std::pow(10.0, -3.0 * rng.uniform());
        z = w + scale * (inner_normal(dom, w) + random_direction(dom.dim(), rng));
        break;
      }
    }
    if (dom.rho(z) > kBoundaryTol) continue;
    const double dist = (w - z).norm();
    if (dist < tiny) continue;
    const double l = std::abs(boundary_functional(dom, z, w));
    rep.margin = std::min(rep.margin, l / (dist * dist));
    rep.max_linear_ratio = std::max(rep.max_linear_ratio, l / dist);
  }
  if (!std::isfinite(rep.margin)) throw NumericError("no admissible pairs were sampled");
  rep.nearly_degenerate = rep.margin < 1e-6;
  return rep;
}

QuasimetricReport measure_quasimetric(const Domain& dom, int triples, Seed128 seed) {
  RngStream rng(seed, 0x7472697000ULL);
  QuasimetricReport rep;
  for (int i = 0; i < triples; ++i) {
    const CVec a = sample_uniform_boundary(dom, rng);
    CVec b, c;
    if (i % 2 == 0) {
      b = sample_uniform_boundary(dom, rng);
      c = sample_uniform_boundary(dom, rng);
    } else {
      b = nearby_boundary(dom, a, rng);
      c = nearby_boundary(dom, a, rng);
    }
    const double ab = quasimetric(dom, a, b), ba = quasimetric(dom, b, a);
    const double bc = quasimetric(dom, b, c), ac = quasimetric(dom, a, c);
    if (ab > 1e-12 && ba > 1e-12)
      rep.symmetry = std::max({rep.symmetry, ab / ba, ba / ab});
    if (ab + bc > 1e-12) rep.triangle = std::max(rep.triangle, ac / (ab + bc));
  }
  return rep;
}

}  // namespace ccvx
