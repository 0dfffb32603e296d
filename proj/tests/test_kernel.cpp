#include <doctest.h>

#include "ccvx/domains.hpp"
#include "helpers.hpp"

using namespace ccvx;
using th::vec;

namespace {

// Ball with rho replaced by (2 + sin Re z1) (|z|^2 - 1).
class RescaledBall final : public Domain {
 public:
  RescaledBall() : Domain(2) {}
  std::string id() const override { return "rescaled-ball"; }
  CatalogueTag tag() const override { return CatalogueTag::Other; }
  double h(const CVec& z) const { return 2.0 + std::sin(z[0].real()); }
  double rho(const CVec& z) const override { return h(z) * (z.squaredNorm() - 1.0); }
  RVec real_gradient(const CVec& z) const override {
    RVec g = 2.0 * h(z) * to_real(z);
    g[0] += std::cos(z[0].real()) * (z.squaredNorm() - 1.0);
    return g;
  }
  CVec center() const override { return CVec::Zero(2); }
  double bounding_radius() const override { return 1.0; }
  BoundaryProposal propose_boundary(RngStream& rng) const override {
    return {th::sphere_point(2, rng), 1.0};
  }
  double proposal_weight_bound() const override { return 1.0; }
  double surface_area() const override { return sphere_area(2); }
  double volume() const override { return kappa(4); }
};

}  // namespace

TEST_CASE("boundary functional examples") {
  const Ball ball(2);
  const CVec w = vec({1.0, 0.0});
  CHECK(std::abs(boundary_functional(ball, CVec::Zero(2), w) - cplx(1.0)) < 1e-15);
  CHECK(std::abs(boundary_functional(ball, w, w)) < 1e-15);

  // model domain based at 0: the conormal there is (0, i), so pairing with z
  // gives i z_d; with the w - z orientation L(z, 0) = -i z_d.
  const ModelQuadratic model(2, {{1.0}, {0.6}, 1.0});
  const CVec origin = CVec::Zero(2);
  const CVec n0 = unit_conormal(model, origin);
  CHECK(std::abs(n0[0]) < 1e-15);
  CHECK(std::abs(n0[1] - cplx(0, 1)) < 1e-15);
  RngStream rng(Seed128{0, 11}, 0);
  for (int k = 0; k < 100; ++k) {
    const CVec z = sample_uniform_boundary(model, rng);
    CHECK(std::abs(bilinear(n0, z) - cplx(0, 1) * z[1]) < 1e-12);
    CHECK(std::abs(boundary_functional(model, z, origin) + cplx(0, 1) * z[1]) < 1e-12);
  }
}

TEST_CASE("boundary functional errors") {
  const Ball ball(2);
  CHECK_THROWS_AS(boundary_functional(ball, CVec::Zero(2), vec({0.5, 0.0})), DomainError);
}

TEST_CASE("inner normal") {
  const Ball ball(2);
  const CVec n = inner_normal(ball, vec({1.0, 0.0}));
  CHECK(std::abs(n[0] - cplx(-1.0)) < 1e-15);
  CHECK(std::abs(n[1]) < 1e-15);

  const ModelQuadratic model(2, {{1.0}, {0.0}, 1.0});
  const CVec m = inner_normal(model, CVec::Zero(2));
  CHECK(std::abs(m[0]) < 1e-15);
  CHECK(std::abs(m[1] - cplx(0, 1)) < 1e-15);

  RngStream rng(Seed128{0, 12}, 0);
  for (const Domain* dom : {static_cast<const Domain*>(&ball), static_cast<const Domain*>(&model)}) {
    for (int k = 0; k < 1000; ++k) {
      const CVec w = sample_uniform_boundary(*dom, rng);
      const CVec eta = inner_normal(*dom, w);
      CHECK(std::abs(eta.norm() - 1.0) < 1e-12);
      CHECK(dom->rho(w + 1e-6 * dom->bounding_radius() * eta) < 0.0);
    }
  }
}

TEST_CASE("quasimetric on the ball") {
  const Ball ball(2);
  CHECK(quasimetric(ball, vec({0.0, 1.0}), vec({1.0, 0.0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(quasimetric(ball, vec({0.0, 1.0}), vec({0.0, 1.0})) == 0.0);

  const QuasimetricReport q = measure_quasimetric(ball, 100000, Seed128{0, 13});
  CHECK(q.triangle <= 1.0 + 1e-9);
  CHECK(q.symmetry <= 1.0 + 1e-9);
}

TEST_CASE("quasimetric constant on a model domain is finite and below 4") {
  const ModelQuadratic model(2, {{1.0}, {0.6}, 1.0});
  const QuasimetricReport q = measure_quasimetric(model, 100000, Seed128{0, 14});
  MESSAGE("model q: symmetry " << q.symmetry << " triangle " << q.triangle);
  CHECK(q.constant() < 4.0);
  CHECK(std::isfinite(q.constant()));
}

TEST_CASE("complex-restricted curvature") {
  const Ball ball(2);
  RngStream rng(Seed128{0, 15}, 0);
  for (int k = 0; k < 20; ++k)
    CHECK(curvature_nu(ball, th::sphere_point(2, rng)) == doctest::Approx(1.0 / 64).epsilon(1e-12));
  CHECK(curvature_nu(ModelQuadratic(2, {{1.0}, {0.0}, 1.0}), CVec::Zero(2)) ==
        doctest::Approx(1.0 / 16).epsilon(1e-12));
  CHECK(curvature_nu(ModelQuadratic(2, {{1.0}, {0.6}, 1.0}), CVec::Zero(2)) ==
        doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("Moebius maps") {
  const CVec z = vec({cplx(0.3, -0.2), cplx(0.1, 0.4)});
  const CVec same = MoebiusMap::identity(2).apply(z);
  CHECK((same - z).norm() < 1e-15);

  CMat a(2, 2);
  a << cplx(1, 1), 2.0, cplx(0, -1), 0.5;
  const CVec b = vec({0.25, cplx(0, 1)});
  CHECK((MoebiusMap::affine(a, b).apply(z) - (a * z + b)).norm() < 1e-14);

  RngStream rng(Seed128{0, 16}, 0);
  for (int k = 0; k < 200; ++k) {
    CMat beta(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) beta(i, j) = cplx(rng.normal(), rng.normal());
    const MoebiusMap m(beta);
    const CVec p = th::ball_point(2, rng);
    if (std::abs(m.beta0(p)) < 1e-3) continue;
    const CVec q = m.apply(p);
    if (std::abs(m.inverse().beta0(q)) < 1e-3) continue;
    CHECK((m.inverse().apply(q) - p).norm() < 1e-9);
  }

  CMat swap = CMat::Zero(3, 3);
  swap(0, 1) = swap(1, 0) = swap(2, 2) = 1.0;
  const MoebiusMap m(swap);  // beta0(z) = z1
  CHECK_THROWS_AS(m.apply(vec({0.0, 0.5})), IndeterminacyError);
}

TEST_CASE("transformation law") {
  const Ball ball(2);
  RngStream rng(Seed128{0, 17}, 0);
  for (int k = 0; k < 100; ++k) {
    const CVec w = th::sphere_point(2, rng);
    const CVec z = th::ball_point(2, rng);
    CHECK(transform_law_residual(ball, MoebiusMap::identity(2), z, w) == 0.0);

    const MoebiusMap u = MoebiusMap::affine(th::random_unitary(2, rng), CVec::Zero(2));
    CHECK(transform_law_residual(ball, u, z, w) <= 1e-9);
    CHECK(std::abs(transform_norm_ratio(ball, u, w) - 1.0) <= 1e-9);

    CMat beta = CMat::Identity(3, 3);
    beta(0, 1) = 0.1;  // beta0(z) = 1 + 0.1 z1
    for (int i = 1; i < 3; ++i)
      for (int j = 0; j < 3; ++j) beta(i, j) += 0.3 * cplx(rng.normal(), rng.normal());
    CHECK(transform_law_residual(ball, MoebiusMap(beta), z, w) <= 1e-9);
  }
}

TEST_CASE("strong convexity margin of the ball") {
  const Ball ball(2);
  const ConvexityMarginReport r = strong_convexity_margin(ball, 100000, Seed128{0, 18});
  CHECK(r.margin >= 0.5 - 1e-12);
  CHECK(r.max_linear_ratio <= 1.0 + 1e-12);
  CHECK_FALSE(r.nearly_degenerate);
  CHECK_THROWS_AS(strong_convexity_margin(ball, 10, Seed128{}), RangeError);
}

TEST_CASE("property: L(w,w) = 0 and the ball sandwich") {
  const Ball ball(2);
  RngStream rng(Seed128{0, 19}, 0);
  for (int k = 0; k < 10000; ++k) {
    const CVec w = th::sphere_point(2, rng);
    const CVec z = th::ball_point(2, rng);
    CHECK(std::abs(boundary_functional(ball, w, w)) <= 1e-12);
    const double l = std::abs(boundary_functional(ball, z, w));
    const double e = (w - z).norm();
    CHECK(e * e / 2.0 <= l * (1.0 + 1e-12));
    CHECK(l <= e * (1.0 + 1e-12));
  }
}

TEST_CASE("property: defining-function independence") {
  const Ball ball(2);
  const RescaledBall scaled;
  RngStream rng(Seed128{0, 20}, 0);
  for (int k = 0; k < 2000; ++k) {
    const CVec w = th::sphere_point(2, rng);
    const CVec z = th::ball_point(2, rng);
    CHECK(std::abs(boundary_functional(ball, z, w) - boundary_functional(scaled, z, w)) < 1e-9);
  }
}

TEST_CASE("property: unitary invariance of nu and d") {
  const DomainPtr ball = make_domain("ball(2)");
  RngStream rng(Seed128{0, 21}, 0);
  for (int k = 0; k < 20; ++k) {
    const CMat u = th::random_unitary(2, rng);
    const AffineImage img(ball, u, CVec::Zero(2));
    for (int j = 0; j < 20; ++j) {
      const CVec a = th::sphere_point(2, rng), b = th::sphere_point(2, rng);
      CHECK(std::abs(curvature_nu(img, u * a) - curvature_nu(*ball, a)) < 1e-9);
      CHECK(std::abs(quasimetric(img, u * a, u * b) - quasimetric(*ball, a, b)) < 1e-9);
    }
  }
}
