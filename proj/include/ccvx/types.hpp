#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace ccvx {

/// Largest complex dimension supported by the fixed-capacity vector types.
inline constexpr int kMaxDim = 8;

using cplx = std::complex<double>;

/// A point or covector in C^d. Capacity is fixed so small vectors live on the stack.
using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
/// Real coordinates (x1, y1, ..., xd, yd) of a point in C^d = R^{2d}.
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2 * kMaxDim, 1>;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                           2 * kMaxDim, 2 * kMaxDim>;
using CMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                           kMaxDim + 1, kMaxDim + 1>;

inline RVec to_real(const CVec& z) {
  RVec x(2 * z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    x[2 * j] = z[j].real();
    x[2 * j + 1] = z[j].imag();
  }
  return x;
}

inline CVec to_complex(const RVec& x) {
  CVec z(x.size() / 2);
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = cplx(x[2 * j], x[2 * j + 1]);
  return z;
}

/// Bilinear pairing sum_j a_j b_j (no conjugation).
inline cplx bilinear(const CVec& a, const CVec& b) {
  cplx s = 0;
  for (Eigen::Index j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

/// Hermitian inner product sum_j a_j conj(b_j).
inline cplx hermitian(const CVec& a, const CVec& b) {
  cplx s = 0;
  for (Eigen::Index j = 0; j < a.size(); ++j) s += a[j] * std::conj(b[j]);
  return s;
}

// Error hierarchy. Every failure the library reports is one of these.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class GradientDegenerateError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class IndeterminacyError : public Error {
 public:
  using Error::Error;
};

class CurvatureSignError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ExitThroughBoundaryError : public Error {
 public:
  using Error::Error;
};

class NetConstructionError : public Error {
 public:
  using Error::Error;
};

class CertificateError : public Error {
 public:
  using Error::Error;
};

class DensityPathologyError : public Error {
 public:
  using Error::Error;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccvx
