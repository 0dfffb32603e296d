#include <doctest.h>

#include "ccvx/estimate.hpp"
#include "ccvx/pp.hpp"
#include "helpers.hpp"

using namespace ccvx;
using th::vec;

namespace {

SourceSample explicit_sample(std::vector<CVec> pts, double delta) {
  SourceSample s;
  s.sizes.assign(pts.size(), delta);
  s.points = std::move(pts);
  s.n = static_cast<long>(s.points.size());
  return s;
}

auto constant_field(double c) {
  return [c](const std::vector<CVec>& z) { return std::vector<double>(z.size(), c); };
}

}  // namespace

TEST_CASE("sphere tube closed form") {
  CHECK(sphere_tube_closed_form(2, 0.0) == 0.0);
  CHECK(sphere_tube_closed_form(2, 1.0) == doctest::Approx(kappa(4)).epsilon(1e-15));
  CHECK(sphere_tube_closed_form(2, 0.1) == doctest::Approx(1.697078).epsilon(1e-6));
  CHECK_THROWS_AS(sphere_tube_closed_form(2, 1.5), RangeError);
}

TEST_CASE("tube formula is exact for constant fields on the sphere") {
  const Ball ball(2);
  for (double c : {0.05, 0.1, 0.2}) {
    const VolumeEstimate e = tube_volume_for_field(ball, constant_field(c), 100, RngStream(Seed128{0, 71}, 0));
    CHECK(std::abs(e.value / sphere_tube_closed_form(2, c) - 1.0) <= 1e-10);
    CHECK(e.method == "depth-integral");
  }
  const PreparedSources none(ball, explicit_sample({}, 0.1));
  CHECK(tubular_volume_depth_integral(none, 1000, RngStream{}).value == 0.0);
}

TEST_CASE("single cut Monte Carlo against the oracle") {
  const Ball ball(2);
  for (double delta : {0.05, 0.1}) {
    const PreparedSources src(ball, explicit_sample({vec({1.0, 0.0})}, delta));
    const VolumeEstimate e = union_cut_volume_mc(src, 1000000, RngStream(Seed128{0, 72}, 0));
    const double oracle = ball_cut_volume_oracle(2, delta);
    CHECK(std::abs(e.value - oracle) <= 4.0 * e.se);
    CHECK(e.n_samples == 1000000);
    CHECK(e.method == "mc-shell");
  }
}

TEST_CASE("empty and monotone union estimates") {
  const Ball ball(2);
  const PreparedSources none(ball, explicit_sample({}, 0.1));
  const VolumeEstimate z = union_cut_volume_mc(none, 1000, RngStream{});
  CHECK(z.value == 0.0);
  CHECK(z.se == 0.0);

  // same shell (delta_max shared) and the same stream: the indicator is pointwise monotone
  const SourceSample big = sample_process(ball, DensitySpec{}, Law::Binomial, 400, SizeFunction{},
                                          RngStream(Seed128{0, 73}, 0));
  SourceSample small = big;
  small.points.resize(200);
  small.sizes.resize(200);
  small.points.push_back(big.points[0]);
  small.sizes.push_back(big.sizes[0]);
  const PreparedSources a(ball, small), b(ball, big);
  REQUIRE(a.delta_max() == b.delta_max());
  const RngStream r(Seed128{0, 74}, 0);
  CHECK(union_cut_volume_mc(a, 200000, r).value <= union_cut_volume_mc(b, 200000, r).value);
}

TEST_CASE("delta_V branches") {
  const Ball ball(2);
  const PreparedSources none(ball, explicit_sample({}, 0.1));
  const CoverageVerdict nv = coverage_test(none, Seed128{});
  const VolumeEstimate pen = delta_v(none, nv, 1000, RngStream{});
  CHECK(pen.value == doctest::Approx(4.9348022).epsilon(1e-8));
  CHECK(pen.se == 0.0);

  const PreparedSources whole(ball, explicit_sample({vec({1.0, 0.0})}, 2.5));
  const CoverageVerdict cv = coverage_test(whole, Seed128{});
  REQUIRE(cv.status == CoverageStatus::Covered);
  const VolumeEstimate a = delta_v(whole, cv, 5000, RngStream(Seed128{0, 75}, 0));
  const VolumeEstimate b = union_cut_volume_mc(whole, 5000, RngStream(Seed128{0, 75}, 0));
  CHECK(a.value == b.value);

  CoverageVerdict unsure = cv;
  unsure.status = CoverageStatus::Uncertain;
  CHECK(delta_v(whole, unsure, 5000, RngStream{}).value == doctest::Approx(kappa(4)));
}

TEST_CASE("single source: depth integral below the union volume") {
  const Ball ball(2);
  const PreparedSources src(ball, explicit_sample({vec({1.0, 0.0})}, 0.1));
  const VolumeEstimate tc = tubular_volume_depth_integral(src, 4000000, RngStream(Seed128{0, 76}, 0));
  const double c = ball_cut_volume_oracle(2, 0.1);
  MESSAGE("tube " << tc.value << " +- " << tc.se << " cut " << c);
  CHECK(tc.value <= c + 4 * tc.se);
  CHECK(c - tc.value <= 0.03 * c + 4 * tc.se);
}

TEST_CASE("property: unbiasedness of the shell estimator") {
  const Ball ball(2);
  const PreparedSources src(ball, explicit_sample({vec({0.6, cplx(0, 0.8)})}, 0.1));
  const int runs = 200;
  double sum = 0, se2 = 0;
  for (int r = 0; r < runs; ++r) {
    const VolumeEstimate e = union_cut_volume_mc(src, 100000, RngStream(Seed128{0, 77}, r));
    sum += e.value;
    se2 += e.se * e.se;
  }
  const double z = (sum / runs - ball_cut_volume_oracle(2, 0.1)) / (std::sqrt(se2) / runs);
  MESSAGE("z " << z);
  CHECK(std::abs(z) <= 4.0);
}

TEST_CASE("property: tube estimate below the union estimate for random samples") {
  const Ball ball(2);
  for (int r = 0; r < 5; ++r) {
    SizeFunction s;
    s.g = Profile::constant(2.0);
    const SourceSample x = sample_process(ball, DensitySpec{}, Law::Poisson, 300, s, RngStream(Seed128{0, 78}, r));
    const PreparedSources src(ball, x);
    const VolumeEstimate tc = tubular_volume_depth_integral(src, 200000, RngStream(Seed128{0, 79}, r));
    const VolumeEstimate c = union_cut_volume_mc(src, 200000, RngStream(Seed128{0, 80}, r));
    CHECK(tc.value <= c.value + 4.0 * std::hypot(tc.se, c.se));
  }
}

TEST_CASE("property: first-order cut law") {
  std::vector<double> x, y;
  for (double d = 0.02; d <= 0.2 + 1e-12; d += 0.02) {
    x.push_back(std::log(d));
    y.push_back(std::log(ball_cut_volume_oracle(2, d)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / x.size();
    my += y[i] / y.size();
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  MESSAGE("slope " << slope);
  CHECK(std::abs(slope - 3.0) <= 0.05);
}

TEST_CASE("volume estimate json") {
  VolumeEstimate e{1.5, 0.25, 10, "mc-shell"};
  const std::string j = e.to_json();
  CHECK(j.find("\"value\"") != std::string::npos);
  CHECK(j.find("\"n_samples\"") != std::string::npos);
}
