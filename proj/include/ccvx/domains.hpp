#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccvx/kernel.hpp"

namespace ccvx {

// ---------------------------------------------------------------------------
// Special constants

/// Lebesgue volume of the unit ball in R^m.
double kappa(int m);

struct DimensionConstants {
  double kappa_2d_minus_2 = 0;
  double kappa_2d = 0;
  double h_d = 0;
  double h_d_plus_1 = 0;
};

DimensionConstants constants(int d);

/// h_d(t) = 2 int_0^{acos t} (cos th - t)^{d-1} cos th dth, with h_d(0) = h_d.
double h_profile(int d, double t);

/// Total surface area of the unit sphere S^{2d-1}.
double sphere_area(int d);

// ---------------------------------------------------------------------------
// Catalogue

class Ball final : public Domain {
 public:
  explicit Ball(int d);

  std::string id() const override;
  CatalogueTag tag() const override { return CatalogueTag::Ball; }
  double rho(const CVec& z) const override;
  RVec real_gradient(const CVec& z) const override;
  RMat real_hessian(const CVec& z) const override;
  bool contains(const CVec& z) const override { return z.squaredNorm() < 1.0; }
  CVec center() const override { return CVec::Zero(dim()); }
  double bounding_radius() const override { return 1.0; }
  BoundaryProposal propose_boundary(RngStream& rng) const override;
  double proposal_weight_bound() const override { return 1.0; }
  double surface_area() const override { return sphere_area(dim()); }
  double volume() const override { return kappa(2 * dim()); }
  std::optional<Shell> cut_shell(double depth) const override;
  CVec sample_interior(RngStream& rng) const override;

 protected:
  // 2(1 - Re<z,w>) = |w - z|^2 + (1 - |z|^2) gives |L| >= |w - z|^2 / 2.
  std::optional<double> exact_convexity_margin() const override { return 0.5; }
  std::optional<double> exact_quasimetric_constant() const override { return 1.0; }
};

struct ModelQuadraticParams {
  std::vector<double> alpha;
  std::vector<double> beta;
  double r_trunc = 1.0;

  /// prod (alpha_j^2 - beta_j^2).
  double v() const;
  double max_alpha() const;
  void validate(int d) const;
};

/// {Im z_d > sum alpha_j |z_j|^2 + beta_j Re(z_j^2)} intersected with |z| < r_trunc.
/// Only the graph part of the boundary is sampled; the truncating sphere is
/// kept far from every cut used in tests.
class ModelQuadratic final : public Domain {
 public:
  ModelQuadratic(int d, ModelQuadraticParams p);

  const ModelQuadraticParams& params() const { return p_; }

  std::string id() const override;
  CatalogueTag tag() const override { return CatalogueTag::ModelQuadratic; }
  double rho(const CVec& z) const override;
  RVec real_gradient(const CVec& z) const override;
  RMat real_hessian(const CVec& z) const override;
  bool contains(const CVec& z) const override;
  CVec center() const override { return CVec::Zero(dim()); }
  double bounding_radius() const override { return p_.r_trunc; }
  BoundaryProposal propose_boundary(RngStream& rng) const override;
  double proposal_weight_bound() const override { return weight_bound_; }
  double surface_area() const override;
  double volume() const override;

  /// f(z') for the first d-1 coordinates of z.
  double graph(const CVec& z) const;

 private:
  ModelQuadraticParams p_;
  double weight_bound_ = 1.0;
  mutable std::once_flag measure_once_;
  mutable double area_ = 0.0;
  mutable double volume_ = 0.0;
  void measure() const;
};

/// z -> A z + shift applied to a base domain.
class AffineImage final : public Domain {
 public:
  AffineImage(DomainPtr base, CMat a, CVec shift);

  const Domain& base() const { return *base_; }
  const CMat& matrix() const { return a_; }
  const CVec& shift() const { return shift_; }

  std::string id() const override;
  CatalogueTag tag() const override { return CatalogueTag::AffineImage; }
  double rho(const CVec& z) const override;
  RVec real_gradient(const CVec& z) const override;
  RMat real_hessian(const CVec& z) const override;
  bool contains(const CVec& z) const override;
  CVec center() const override;
  double bounding_radius() const override;
  BoundaryProposal propose_boundary(RngStream& rng) const override;
  double proposal_weight_bound() const override;
  double surface_area() const override;
  double volume() const override;
  std::optional<Shell> cut_shell(double depth) const override;
  CVec sample_interior(RngStream& rng) const override;

  CVec to_base(const CVec& z) const;
  CVec from_base(const CVec& u) const;

 private:
  DomainPtr base_;
  CMat a_, a_inv_;
  CVec shift_;
  RMat m_inv_;           // real form of A^{-1}
  double det_real_ = 1;  // |det_R A| = |det_C A|^2
  double op_norm_ = 1, inv_op_norm_ = 1;
  mutable std::once_flag area_once_;
  mutable double area_ = 0.0;
  double area_factor(const CVec& base_point) const;
};

/// Real 2d x 2d matrix of a complex-linear map in (x1, y1, ..., xd, yd) order.
RMat real_form(const CMat& c);

/// Parses "ball(d)", "ballN", "model(d, alpha=[..], beta=[..], r_trunc=..)" and
/// "affine(<base>, matrix=[[..]], shift=[..])". Complex entries are numbers or [re, im].
DomainPtr make_domain(std::string_view id);

// ---------------------------------------------------------------------------
// Closed forms and oracles

/// lambda(C(0; delta)) = h_{d+1} kappa_{2d-2} / (d sqrt v) delta^{d+1}.
double model_cut_volume(const ModelQuadraticParams& p, int d, double delta);

/// h_d kappa_{2d-2} / sqrt(v) delta^d.
double model_cap_area_leading(const ModelQuadraticParams& p, int d, double delta);

std::pair<double, double> model_visibility_band(const ModelQuadraticParams& p, int d,
                                                double delta, double t);

/// Unit ball cut volume by polar quadrature around u = 1 of the slice integral.
double ball_cut_volume_oracle(int d, double delta);

/// Unit sphere cap area from the pushforward density onto the unit disc.
double ball_cap_area_oracle(int d, double delta);

struct CurvatureData {
  std::vector<double> curvatures;  // 2d-1 principal curvatures, sphere = +1
  std::vector<double> s;           // s_1 .. s_{2d-1}
  /// s_j with s_0 = 1.
  double at(int j) const { return j == 0 ? 1.0 : s.at(static_cast<std::size_t>(j - 1)); }
};

CurvatureData curvature_polys(const Domain& dom, const CVec& zeta);

}  // namespace ccvx
