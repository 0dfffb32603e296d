#pragma once

#include <cmath>
#include <vector>

#include <Eigen/QR>

#include "ccvx/domains.hpp"
#include "ccvx/rng.hpp"

namespace th {

using ccvx::cplx;
using ccvx::CVec;

inline CVec vec(std::initializer_list<cplx> v) {
  CVec z(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (cplx c : v) z[i++] = c;
  return z;
}

inline CVec sphere_point(int d, ccvx::RngStream& rng) {
  CVec z(d);
  for (int j = 0; j < d; ++j) z[j] = cplx(rng.normal(), rng.normal());
  return z / z.norm();
}

inline CVec ball_point(int d, ccvx::RngStream& rng) {
  const CVec u = sphere_point(d, rng);
  return u * std::pow(rng.uniform(), 1.0 / (2 * d));
}

/// Haar-random unitary from the QR factors of a complex Gaussian matrix.
inline ccvx::CMat random_unitary(int d, ccvx::RngStream& rng) {
  Eigen::MatrixXcd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  ccvx::CMat out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = q(i, j);
  return out;
}

/// Point on S^3 with u = <w, zeta> drawn uniformly from {|1 - u| <= reach} in the
/// unit disc. For d = 2 the pushforward of sigma onto u is uniform, so the result
/// is uniform on the corresponding region of the sphere.
inline CVec sphere_point_near(const CVec& zeta, double reach, ccvx::RngStream& rng) {
  const CVec perp = th::vec({-std::conj(zeta[1]), std::conj(zeta[0])});
  for (;;) {
    const cplx u(1.0 - reach + 2.0 * reach * rng.uniform(), reach * (2.0 * rng.uniform() - 1.0));
    if (std::norm(u) >= 1.0 || std::abs(1.0 - u) > reach) continue;
    const double r = std::sqrt(1.0 - std::norm(u));
    const double th = 2.0 * M_PI * rng.uniform();
    return u * zeta + r * std::polar(1.0, th) * perp;
  }
}

/// Equal-area grid on S^3: z1 = cos(eta) e^{i a}, z2 = sin(eta) e^{i b} with
/// cos^2(eta) at cell midpoints.
inline std::vector<CVec> hopf_grid(int k) {
  std::vector<CVec> out;
  out.reserve(static_cast<std::size_t>(k) * k * k);
  for (int i = 0; i < k; ++i) {
    const double c2 = (i + 0.5) / k;
    const double c = std::sqrt(c2), s = std::sqrt(1.0 - c2);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        out.push_back(vec({std::polar(c, 2.0 * M_PI * (a + 0.5) / k),
                           std::polar(s, 2.0 * M_PI * (b + 0.5) / k)}));
  }
  return out;
}

}  // namespace th
