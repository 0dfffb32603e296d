#include "ccvx/domains.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

namespace ccvx {

namespace {

using boost::math::quadrature::gauss_kronrod;

template <class F>
double gk(F f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol);
}

CVec gaussian_direction(int d, RngStream& rng) {
  CVec v(d);
  for (int j = 0; j < d; ++j) v[j] = cplx(rng.normal(), rng.normal());
  return v / v.norm();
}

}  // namespace

double kappa(int m) {
  return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

double sphere_area(int d) { return 2.0 * d * kappa(2 * d); }

double h_profile(int d, double t) {
  if (d < 1) throw RangeError("h_profile needs d >= 1");
  if (!(t >= 0.0 && t <= 1.0)) throw RangeError("h_profile needs t in [0, 1]");
  if (t == 1.0) return 0.0;
  const double upper = std::acos(t);
  auto f = [d, t](double th) {
    const double c = std::cos(th);
    return std::pow(std::max(c - t, 0.0), d - 1) * c;
  };
  return 2.0 * gk(f, 0.0, upper, 1e-13);
}

DimensionConstants constants(int d) {
  if (d < 2) throw RangeError("constants need d >= 2");
  return {kappa(2 * d - 2), kappa(2 * d), h_profile(d, 0.0), h_profile(d + 1, 0.0)};
}

// ---------------------------------------------------------------------------
// Ball

Ball::Ball(int d) : Domain(d) {}

std::string Ball::id() const { return "ball(" + std::to_string(dim()) + ")"; }

double Ball::rho(const CVec& z) const { return z.squaredNorm() - 1.0; }

RVec Ball::real_gradient(const CVec& z) const { return 2.0 * to_real(z); }

RMat Ball::real_hessian(const CVec&) const {
  return 2.0 * RMat::Identity(2 * dim(), 2 * dim());
}

BoundaryProposal Ball::propose_boundary(RngStream& rng) const {
  return {gaussian_direction(dim(), rng), 1.0};
}

std::optional<Shell> Ball::cut_shell(double depth) const {
  // 1 - |z| <= |1 - <z,w>| = |L(z,w)|, so every cut of level <= depth sits in this shell.
  const int n = 2 * dim();
  const double inner = std::max(0.0, 1.0 - depth);
  const double a = std::pow(inner, n);
  Shell s;
  s.volume = kappa(n) * (1.0 - a);
  const int d = dim();
  s.sample = [a, n, d](RngStream& rng) {
    const CVec dir = gaussian_direction(d, rng);
    const double r = std::pow(rng.uniform() * (1.0 - a) + a, 1.0 / n);
    return CVec(r * dir);
  };
  s.contains = [inner](const CVec& z) { return z.norm() >= inner; };
  return s;
}

CVec Ball::sample_interior(RngStream& rng) const {
  const CVec dir = gaussian_direction(dim(), rng);
  return std::pow(rng.uniform(), 1.0 / (2 * dim())) * dir;
}

// ---------------------------------------------------------------------------
// Model quadratic

double ModelQuadraticParams::v() const {
  double out = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) out *= alpha[j] * alpha[j] - beta[j] * beta[j];
  return out;
}

double ModelQuadraticParams::max_alpha() const {
  return *std::max_element(alpha.begin(), alpha.end());
}

void ModelQuadraticParams::validate(int d) const {
  if (static_cast<int>(alpha.size()) != d - 1 || static_cast<int>(beta.size()) != d - 1)
    throw ConfigError("model domain needs d-1 alpha and beta values");
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (!(beta[j] >= 0.0 && beta[j] < alpha[j]))
      throw ConfigError("model domain needs 0 <= beta_j < alpha_j");
  }
  if (!(r_trunc > 0.0)) throw ConfigError("model domain needs r_trunc > 0");
}

ModelQuadratic::ModelQuadratic(int d, ModelQuadraticParams p) : Domain(d), p_(std::move(p)) {
  p_.validate(d);
  double g2 = 0.0;
  for (std::size_t j = 0; j < p_.alpha.size(); ++j) {
    const double c = 2.0 * (p_.alpha[j] + p_.beta[j]) * p_.r_trunc;
    g2 = std::max(g2, c * c);
  }
  // |grad f|^2 <= max_j 4 (alpha_j + beta_j)^2 |z'|^2.
  weight_bound_ = std::sqrt(1.0 + g2);
}

std::string ModelQuadratic::id() const {
  std::ostringstream os;
  os.precision(17);
  os << "model(" << dim() << ", alpha=[";
  for (std::size_t j = 0; j < p_.alpha.size(); ++j) os << (j ? ", " : "") << p_.alpha[j];
  os << "], beta=[";
  for (std::size_t j = 0; j < p_.beta.size(); ++j) os << (j ? ", " : "") << p_.beta[j];
  os << "]";
  if (p_.r_trunc != 1.0) os << ", r_trunc=" << p_.r_trunc;
  os << ")";
  return os.str();
}

double ModelQuadratic::graph(const CVec& z) const {
  double f = 0.0;
  for (int j = 0; j + 1 < dim(); ++j) {
    const double x = z[j].real(), y = z[j].imag();
    f += p_.alpha[j] * (x * x + y * y) + p_.beta[j] * (x * x - y * y);
  }
  return f;
}

double ModelQuadratic::rho(const CVec& z) const { return graph(z) - z[dim() - 1].imag(); }

RVec ModelQuadratic::real_gradient(const CVec& z) const {
  RVec g = RVec::Zero(2 * dim());
  for (int j = 0; j + 1 < dim(); ++j) {
    g[2 * j] = 2.0 * (p_.alpha[j] + p_.beta[j]) * z[j].real();
    g[2 * j + 1] = 2.0 * (p_.alpha[j] - p_.beta[j]) * z[j].imag();
  }
  g[2 * dim() - 1] = -1.0;
  return g;
}

RMat ModelQuadratic::real_hessian(const CVec&) const {
  RMat h = RMat::Zero(2 * dim(), 2 * dim());
  for (int j = 0; j + 1 < dim(); ++j) {
    h(2 * j, 2 * j) = 2.0 * (p_.alpha[j] + p_.beta[j]);
    h(2 * j + 1, 2 * j + 1) = 2.0 * (p_.alpha[j] - p_.beta[j]);
  }
  return h;
}

bool ModelQuadratic::contains(const CVec& z) const {
  return rho(z) < 0.0 && z.squaredNorm() < p_.r_trunc * p_.r_trunc;
}

BoundaryProposal ModelQuadratic::propose_boundary(RngStream& rng) const {
  // Chart (z', x_d) uniform in the box; the graph point carries the area element.
  const int d = dim();
  const double r = p_.r_trunc;
  CVec z(d);
  for (int j = 0; j + 1 < d; ++j)
    z[j] = cplx(r * (2.0 * rng.uniform() - 1.0), r * (2.0 * rng.uniform() - 1.0));
  const double xd = r * (2.0 * rng.uniform() - 1.0);
  z[d - 1] = cplx(xd, 0.0);
  z[d - 1] = cplx(xd, graph(z));
  if (z.squaredNorm() > r * r) return {z, 0.0};
  const RVec g = real_gradient(z);
  return {z, g.norm()};  // sqrt(1 + |grad f|^2)
}

void ModelQuadratic::measure() const {
  std::call_once(measure_once_, [this] {
    RngStream rng(Seed128{0, 0x6d6f64656cULL}, 0);
    const int samples = 400000;
    const double r = p_.r_trunc;
    double wsum = 0.0;
    for (int i = 0; i < samples; ++i) wsum += propose_boundary(rng).weight;
    area_ = std::pow(2.0 * r, 2 * dim() - 1) * wsum / samples;
    long hits = 0;
    for (int i = 0; i < samples; ++i) {
      CVec z(dim());
      for (int j = 0; j < dim(); ++j)
        z[j] = cplx(r * (2.0 * rng.uniform() - 1.0), r * (2.0 * rng.uniform() - 1.0));
      hits += contains(z) ? 1 : 0;
    }
    volume_ = std::pow(2.0 * r, 2 * dim()) * static_cast<double>(hits) / samples;
  });
}

double ModelQuadratic::surface_area() const {
  measure();
  return area_;
}

double ModelQuadratic::volume() const {
  measure();
  return volume_;
}

// ---------------------------------------------------------------------------
// Affine image

RMat real_form(const CMat& c) {
  const int n = static_cast<int>(c.rows());
  RMat m(2 * n, 2 * n);
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < n; ++k) {
      const cplx v = c(r, k);
      m(2 * r, 2 * k) = v.real();
      m(2 * r, 2 * k + 1) = -v.imag();
      m(2 * r + 1, 2 * k) = v.imag();
      m(2 * r + 1, 2 * k + 1) = v.real();
    }
  }
  return m;
}

AffineImage::AffineImage(DomainPtr base, CMat a, CVec shift)
    : Domain(base ? base->dim() : 0), base_(std::move(base)), a_(std::move(a)),
      shift_(std::move(shift)) {
  const int d = dim();
  if (a_.rows() != d || a_.cols() != d || shift_.size() != d)
    throw ConfigError("affine map has the wrong shape for its base domain");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd{Eigen::MatrixXcd(a_)};
  const auto& s = svd.singularValues();
  if (!(s[d - 1] > 1e-12 * s[0])) throw ConfigError("affine matrix is singular");
  op_norm_ = s[0];
  inv_op_norm_ = 1.0 / s[d - 1];
  a_inv_ = a_.inverse();
  m_inv_ = real_form(a_inv_);
  det_real_ = std::norm(a_.determinant());
}

std::string AffineImage::id() const {
  std::ostringstream os;
  os.precision(17);
  auto put = [&os](cplx v) { os << "[" << v.real() << ", " << v.imag() << "]"; };
  os << "affine(" << base_->id() << ", matrix=[";
  for (int r = 0; r < dim(); ++r) {
    os << (r ? ", " : "") << "[";
    for (int k = 0; k < dim(); ++k) {
      if (k) os << ", ";
      put(a_(r, k));
    }
    os << "]";
  }
  os << "], shift=[";
  for (int j = 0; j < dim(); ++j) {
    if (j) os << ", ";
    put(shift_[j]);
  }
  os << "])";
  return os.str();
}

CVec AffineImage::to_base(const CVec& z) const { return a_inv_ * (z - shift_); }
CVec AffineImage::from_base(const CVec& u) const { return a_ * u + shift_; }

double AffineImage::rho(const CVec& z) const { return base_->rho(to_base(z)); }

RVec AffineImage::real_gradient(const CVec& z) const {
  return m_inv_.transpose() * base_->real_gradient(to_base(z));
}

RMat AffineImage::real_hessian(const CVec& z) const {
  return m_inv_.transpose() * base_->real_hessian(to_base(z)) * m_inv_;
}

bool AffineImage::contains(const CVec& z) const { return base_->contains(to_base(z)); }

CVec AffineImage::center() const { return from_base(base_->center()); }

double AffineImage::bounding_radius() const { return op_norm_ * base_->bounding_radius(); }

double AffineImage::area_factor(const CVec& u) const {
  const RVec g = base_->real_gradient(u);
  return det_real_ * (m_inv_.transpose() * g).norm() / g.norm();
}

BoundaryProposal AffineImage::propose_boundary(RngStream& rng) const {
  BoundaryProposal p = base_->propose_boundary(rng);
  if (p.weight > 0.0) p.weight *= area_factor(p.point);
  p.point = from_base(p.point);
  return p;
}

double AffineImage::proposal_weight_bound() const {
  return base_->proposal_weight_bound() * det_real_ * inv_op_norm_;
}

double AffineImage::surface_area() const {
  std::call_once(area_once_, [this] {
    RngStream rng(Seed128{0, 0x616666696eULL}, 0);
    const int samples = 200000;
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) sum += area_factor(sample_uniform_boundary(*base_, rng));
    area_ = base_->surface_area() * sum / samples;
  });
  return area_;
}

double AffineImage::volume() const { return det_real_ * base_->volume(); }

std::optional<Shell> AffineImage::cut_shell(double depth) const {
  // |L_base| <= |A^{-1}| |L|, so the image of a deeper base shell certifies the cut.
  auto base_shell = base_->cut_shell(inv_op_norm_ * depth);
  if (!base_shell) return std::nullopt;
  Shell s;
  s.volume = det_real_ * base_shell->volume;
  auto sampler = base_shell->sample;
  CMat a = a_;
  CVec b = shift_;
  s.sample = [sampler, a, b](RngStream& rng) { return CVec(a * sampler(rng) + b); };
  auto inside = base_shell->contains;
  CMat a_inv = a_inv_;
  s.contains = [inside, a_inv, b](const CVec& z) { return inside(CVec(a_inv * (z - b))); };
  return s;
}

CVec AffineImage::sample_interior(RngStream& rng) const {
  return from_base(base_->sample_interior(rng));
}

// ---------------------------------------------------------------------------
// Identifier parsing

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_top_level(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (depth < 0) throw ConfigError("unbalanced brackets in domain id");
    if (c == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (depth != 0) throw ConfigError("unbalanced brackets in domain id");
  out.push_back(trim(s.substr(start)));
  return out;
}

nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad list in domain id: " + text);
  }
}

cplx json_complex(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError("complex entries must be numbers or [re, im]");
}

std::vector<double> json_reals(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("expected a list of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError("expected a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

int parse_dim(const std::string& s) {
  try {
    std::size_t used = 0;
    const int d = std::stoi(s, &used);
    if (used != s.size()) throw ConfigError("bad dimension: " + s);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("bad dimension: " + s);
  }
}

}  // namespace

DomainPtr make_domain(std::string_view raw) {
  const std::string id = trim(raw);
  if (id.size() > 4 && id.starts_with("ball") && std::isdigit(static_cast<unsigned char>(id[4])))
    return std::make_shared<Ball>(parse_dim(id.substr(4)));
  const auto open = id.find('(');
  if (open == std::string::npos || id.back() != ')') throw ConfigError("unknown domain id: " + id);
  const std::string name = trim(std::string_view(id).substr(0, open));
  const auto args = split_top_level(std::string_view(id).substr(open + 1, id.size() - open - 2));

  auto keyed = [&args](const std::string& key) -> std::optional<std::string> {
    for (std::size_t i = 1; i < args.size(); ++i) {
      const auto eq = args[i].find('=');
      if (eq != std::string::npos && trim(std::string_view(args[i]).substr(0, eq)) == key)
        return trim(std::string_view(args[i]).substr(eq + 1));
    }
    return std::nullopt;
  };

  try {
    if (name == "ball") {
      if (args.size() != 1) throw ConfigError("ball(d) takes one argument");
      return std::make_shared<Ball>(parse_dim(args[0]));
    }
    if (name == "model") {
      const int d = parse_dim(args[0]);
      ModelQuadraticParams p;
      const auto a = keyed("alpha");
      const auto b = keyed("beta");
      if (!a) throw ConfigError("model domain needs alpha=[...]");
      p.alpha = json_reals(parse_json(*a));
      p.beta = b ? json_reals(parse_json(*b)) : std::vector<double>(p.alpha.size(), 0.0);
      if (auto r = keyed("r_trunc")) p.r_trunc = parse_json(*r).get<double>();
      return std::make_shared<ModelQuadratic>(d, p);
    }
    if (name == "affine") {
      DomainPtr base = make_domain(args[0]);
      const int d = base->dim();
      const auto m = keyed("matrix");
      if (!m) throw ConfigError("affine domain needs matrix=[[...]]");
      const auto mj = parse_json(*m);
      if (!mj.is_array() || static_cast<int>(mj.size()) != d)
        throw ConfigError("affine matrix must have d rows");
      CMat a(d, d);
      for (int r = 0; r < d; ++r) {
        if (!mj[r].is_array() || static_cast<int>(mj[r].size()) != d)
          throw ConfigError("affine matrix must have d columns");
        for (int k = 0; k < d; ++k) a(r, k) = json_complex(mj[r][k]);
      }
      CVec shift = CVec::Zero(d);
      if (auto s = keyed("shift")) {
        const auto sj = parse_json(*s);
        if (!sj.is_array() || static_cast<int>(sj.size()) != d)
          throw ConfigError("affine shift must have d entries");
        for (int j = 0; j < d; ++j) shift[j] = json_complex(sj[j]);
      }
      return std::make_shared<AffineImage>(base, a, shift);
    }
  } catch (const RangeError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown domain id: " + id);
}

// ---------------------------------------------------------------------------
// Closed forms

double model_cut_volume(const ModelQuadraticParams& p, int d, double delta) {
  p.validate(d);
  if (!(delta > 0.0)) throw RangeError("cut volume needs delta > 0");
  const auto c = constants(d);
  return c.h_d_plus_1 * c.kappa_2d_minus_2 / (d * std::sqrt(p.v())) * std::pow(delta, d + 1);
}

double model_cap_area_leading(const ModelQuadraticParams& p, int d, double delta) {
  p.validate(d);
  if (delta < 0.0) throw RangeError("cap area needs delta >= 0");
  const auto c = constants(d);
  return c.h_d * c.kappa_2d_minus_2 / std::sqrt(p.v()) * std::pow(delta, d);
}

std::pair<double, double> model_visibility_band(const ModelQuadraticParams& p, int d,
                                                double delta, double t) {
  p.validate(d);
  const double amax = p.max_alpha();
  if (!(delta > 0.0 && delta < 1.0 / (2.0 * amax)))
    throw RangeError("visibility band needs 0 < delta < 1/(2 max alpha)");
  if (!(t >= 0.0 && t < 1.0)) throw RangeError("visibility band needs t in [0, 1)");
  const double hdt = h_profile(d, t);
  const double lower = kappa(2 * d - 2) * hdt * std::pow(delta, d) / std::sqrt(p.v());
  const double e = 8.0 * amax * delta;
  const double upper = lower * std::pow(1.0 + e, d) *
                       (hdt + (d - 1) * h_profile(d - 1, 0.0) * e * t / (1.0 + e)) / hdt;
  return {lower, upper};
}

namespace {

// int over {u in unit disc : |1 - u| < delta} of (1 - |u|^2)^power dA(u), with
// u = 1 - s e^{i th}, 1 - |u|^2 = 2 s cos th - s^2.
double disc_slice_integral(int power, double delta) {
  if (!(delta > 0.0 && delta <= 2.0)) throw RangeError("oracle needs 0 < delta <= 2");
  // u = 1 - s e^{i th}, ph = pi/2 - th: integrand s (2 s sin ph - s^2)^p over
  // s < min(delta, 2 sin ph). The s-integral is a polynomial, done exactly; ph is
  // split at the kink 2 sin ph = delta.
  auto radial = [power, delta](double ph) {
    const double a = 2.0 * std::sin(ph);
    const double m = std::min(delta, a);
    if (!(m > 0.0)) return 0.0;
    double sum = 0.0, binom = 1.0;
    for (int k = 0; k <= power; ++k) {
      sum += binom * std::pow(a, power - k) * ((k % 2) ? -1.0 : 1.0) *
             std::pow(m, power + k + 2) / (power + k + 2);
      binom = binom * (power - k) / (k + 1);
    }
    return sum;
  };
  const double half_pi = std::numbers::pi / 2.0;
  const double kink = delta < 2.0 ? std::asin(delta / 2.0) : half_pi;
  return 2.0 * (gk(radial, 0.0, kink, 1e-10) + gk(radial, kink, half_pi, 1e-10));
}

}  // namespace

double ball_cut_volume_oracle(int d, double delta) {
  if (d < 2) throw RangeError("oracle needs d >= 2");
  return kappa(2 * d - 2) * disc_slice_integral(d - 1, delta);
}

double ball_cap_area_oracle(int d, double delta) {
  if (d < 2) throw RangeError("oracle needs d >= 2");
  return sphere_area(d) * (d - 1) / std::numbers::pi * disc_slice_integral(d - 2, delta);
}

// ---------------------------------------------------------------------------

CurvatureData curvature_polys(const Domain& dom, const CVec& zeta) {
  if (std::abs(dom.rho(zeta)) > kBoundaryTol)
    throw DomainError("curvature_polys needs a boundary point");
  const int n = 2 * dom.dim();
  const RVec g = dom.real_gradient(zeta);
  const double gn = g.norm();
  if (gn < kDegenerateGradient) throw GradientDegenerateError("gradient vanishes");
  const Eigen::VectorXd nrm = Eigen::VectorXd(g) / gn;

  // Orthonormal tangent basis: complete the normal with Householder QR.
  Eigen::MatrixXd basis(n, n);
  basis.col(0) = nrm;
  basis.rightCols(n - 1) = Eigen::MatrixXd::Identity(n, n).leftCols(n - 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd t = q.rightCols(n - 1);

  const Eigen::MatrixXd shape = t.transpose() * Eigen::MatrixXd(dom.real_hessian(zeta)) * t / gn;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (shape + shape.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("shape operator eigen-solve failed");

  CurvatureData out;
  out.curvatures.assign(es.eigenvalues().data(), es.eigenvalues().data() + (n - 1));
  std::vector<double> e(n, 0.0);  // e[0] = 1, elementary symmetric polynomials
  e[0] = 1.0;
  for (double k : out.curvatures)
    for (int j = n - 1; j >= 1; --j) e[j] += k * e[j - 1];
  out.s.assign(e.begin() + 1, e.end());
  return out;
}

}  // namespace ccvx
