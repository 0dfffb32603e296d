#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ccvx/pp.hpp"
#include "helpers.hpp"

using namespace ccvx;
using th::vec;

TEST_CASE("uniform boundary sampling on the ball") {
  const Ball ball(2);
  RngStream rng(Seed128{0, 61}, 0);
  const DensitySpec f;
  const long m = 100000;
  std::array<double, 4> sum{}, sq{};
  for (long i = 0; i < m; ++i) {
    const CVec w = sample_boundary_point(ball, f, rng);
    CHECK(std::abs(w.norm() - 1.0) <= 1e-12);
    const RVec x = to_real(w);
    for (int k = 0; k < 4; ++k) {
      sum[k] += x[k];
      sq[k] += x[k] * x[k];
    }
  }
  for (int k = 0; k < 4; ++k) {
    const double mean = sum[k] / m;
    const double sd = std::sqrt(sq[k] / m - mean * mean);
    CHECK(std::abs(mean) <= 4.0 * sd / std::sqrt(double(m)));
  }
}

TEST_CASE("profile density: chi-square goodness of fit") {
  // f proportional to 1 + Re z1 / 2; Re z1 of a uniform point on S^3 has density
  // (2/pi) sqrt(1 - x^2), so the target law of x is (2/pi) sqrt(1 - x^2)(1 + x/2).
  const Ball ball(2);
  const DensitySpec f = DensitySpec::from_profile({1.0, 0.5, "re_z1"});
  RngStream rng(Seed128{0, 62}, 0);
  const int bins = 16;
  const long m = 100000;
  std::vector<long> count(bins, 0);
  for (long i = 0; i < m; ++i) {
    const double x = sample_boundary_point(ball, f, rng)[0].real();
    count[std::min(bins - 1, static_cast<int>((x + 1.0) / 2.0 * bins))]++;
  }
  auto density = [](double x) { return 2.0 / M_PI * std::sqrt(1.0 - x * x) * (1.0 + x / 2.0); };
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double lo = -1.0 + 2.0 * b / bins, hi = lo + 2.0 / bins;
    const double p = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(density, lo, hi, 10, 1e-12);
    const double e = p * m;
    chi2 += (count[b] - e) * (count[b] - e) / e;
  }
  const boost::math::chi_squared_distribution<double> dist(bins - 1);
  const double pval = 1.0 - boost::math::cdf(dist, chi2);
  MESSAGE("chi2 " << chi2 << " p " << pval);
  CHECK(pval > 0.001);
}

TEST_CASE("density normalization") {
  const Ball ball(2);
  const DensitySpec f = DensitySpec::from_profile({1.0, 0.5, "re_z1"});
  RngStream rng(Seed128{0, 63}, 0);
  const long m = 200000;
  double s = 0, s2 = 0;
  for (long i = 0; i < m; ++i) {
    const double v = f(ball, th::sphere_point(2, rng)) * sphere_area(2);
    s += v;
    s2 += v * v;
  }
  const double mean = s / m, se = std::sqrt((s2 / m - mean * mean) / m);
  CHECK(std::abs(mean - 1.0) <= 3 * se);
  CHECK_THROWS(DensitySpec::from_profile({1.0, 2.0, "re_z1"}).raw_bounds(ball));
}

TEST_CASE("Poisson counts") {
  RngStream rng(Seed128{0, 64}, 0);
  CHECK(poisson_count(0.0, rng) == 0);
  for (double mean : {5.0, 500.0}) {
    const long m = 100000;
    double s = 0;
    for (long i = 0; i < m; ++i) s += static_cast<double>(poisson_count(mean, rng));
    CHECK(std::abs(s / m - mean) <= 4.0 * std::sqrt(mean / m));
  }
  RngStream a(Seed128{0, 65}, 3), b(Seed128{0, 65}, 3);
  CHECK(poisson_count(5.0, a) == poisson_count(5.0, b));
  CHECK_THROWS_AS(poisson_count(2e9, rng), RangeError);
  CHECK_THROWS_AS(poisson_count(-1.0, rng), RangeError);
}

TEST_CASE("process sampling") {
  const Ball ball(2);
  const SizeFunction s;
  const SourceSample bin = sample_process(ball, DensitySpec{}, Law::Binomial, 500, s,
                                          RngStream(Seed128{0, 66}, 0));
  CHECK(bin.size() == 500);
  for (std::size_t i = 0; i < bin.size(); ++i) {
    CHECK(std::abs(ball.rho(bin.points[i])) <= 1e-10);
    CHECK(bin.sizes[i] == size_at(s, 500, bin.points[i]));
  }
  double total = 0;
  for (int r = 0; r < 1000; ++r)
    total += static_cast<double>(
        sample_process(ball, DensitySpec{}, Law::Poisson, 500, s, RngStream(Seed128{0, 67}, r)).size());
  CHECK(std::abs(total / 1000 - 500) <= 4.0 * std::sqrt(500.0 / 1000));
  CHECK_THROWS_AS(sample_process(ball, DensitySpec{}, Law::Binomial, 1, s, RngStream{}), RangeError);
}

TEST_CASE("streams: identical replay, distinct streams differ") {
  const Ball ball(2);
  const SizeFunction s;
  const auto a = sample_process(ball, DensitySpec{}, Law::Poisson, 300, s, RngStream(Seed128{1, 2}, 9));
  const auto b = sample_process(ball, DensitySpec{}, Law::Poisson, 300, s, RngStream(Seed128{1, 2}, 9));
  const auto c = sample_process(ball, DensitySpec{}, Law::Poisson, 300, s, RngStream(Seed128{1, 2}, 10));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.points[i] == b.points[i]);
  CHECK((a.size() != c.size() || a.points[0] != c.points[0]));
  CHECK(Seed128::from_hex("0123456789abcdef0011223344556677").to_hex() ==
        "0123456789abcdef0011223344556677");
}

TEST_CASE("property: counts in disjoint caps are uncorrelated") {
  const Ball ball(2);
  const SizeFunction s;
  const CVec a = vec({1.0, 0.0}), b = vec({-1.0, 0.0});
  const int reps = 1000;
  std::vector<double> x(reps), y(reps);
  for (int r = 0; r < reps; ++r) {
    const auto smp = sample_process(ball, DensitySpec{}, Law::Poisson, 200, s, RngStream(Seed128{0, 68}, r));
    for (const CVec& p : smp.points) {
      x[r] += std::abs(boundary_functional(ball, p, a)) < 0.5;
      y[r] += std::abs(boundary_functional(ball, p, b)) < 0.5;
    }
  }
  double mx = 0, my = 0;
  for (int r = 0; r < reps; ++r) {
    mx += x[r] / reps;
    my += y[r] / reps;
  }
  std::vector<double> prod(reps);
  double mp = 0;
  for (int r = 0; r < reps; ++r) {
    prod[r] = (x[r] - mx) * (y[r] - my);
    mp += prod[r] / reps;
  }
  double v = 0;
  for (double p : prod) v += (p - mp) * (p - mp) / (reps - 1);
  CHECK(std::abs(mp) <= 4.0 * std::sqrt(v / reps));
}

TEST_CASE("RNG determinism") {
  RngStream a(Seed128{5, 6}, 7), b(Seed128{5, 6}, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(Seed128{5, 6}, 7, 40);
  RngStream d(Seed128{5, 6}, 7);
  for (int i = 0; i < 160; ++i) d.next_u64();
  CHECK(c.next_u64() == d.next_u64());
}
