#include "ccvx/poly.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

namespace ccvx {

double eval_phi(const std::string& phi, const CVec& w) {
  if (phi == "re_z1") return w[0].real();
  if (phi == "im_z1") return w[0].imag();
  if (phi == "abs_z1_sq") return std::norm(w[0]);
  throw ConfigError("unknown profile function: " + phi);
}

double Profile::operator()(const CVec& w) const {
  if (c1 == 0.0) return c0;
  return c0 + c1 * eval_phi(phi, w);
}

std::pair<double, double> Profile::bounds(const Domain& dom) const {
  if (c1 == 0.0) return {c0, c0};
  const cplx c = dom.center()[0];
  const double r = dom.bounding_radius();
  double lo = 0, hi = 0;
  if (phi == "re_z1") {
    lo = c.real() - r;
    hi = c.real() + r;
  } else if (phi == "im_z1") {
    lo = c.imag() - r;
    hi = c.imag() + r;
  } else if (phi == "abs_z1_sq") {
    lo = std::pow(std::max(0.0, std::abs(c) - r), 2);
    hi = std::pow(std::abs(c) + r, 2);
  } else {
    throw ConfigError("unknown profile function: " + phi);
  }
  const double a = c0 + c1 * lo, b = c0 + c1 * hi;
  return {std::min(a, b), std::max(a, b)};
}

double SizeFunction::scale(long n, int d) {
  if (n < 2) throw RangeError("size function needs n >= 2");
  const double nn = static_cast<double>(n);
  return std::pow(std::log(nn) / nn, 1.0 / d);
}

double size_at(const SizeFunction& s, long n, const CVec& w) {
  return s.g(w) * SizeFunction::scale(n, static_cast<int>(w.size()));
}

std::string to_string(Law law) {
  switch (law) {
    case Law::Binomial: return "binomial";
    case Law::Poisson: return "poisson";
    case Law::Explicit: return "explicit";
  }
  return "explicit";
}

Law parse_law(const std::string& s) {
  if (s == "binomial") return Law::Binomial;
  if (s == "poisson") return Law::Poisson;
  if (s == "explicit") return Law::Explicit;
  throw ConfigError("unknown process law: " + s);
}

// ---------------------------------------------------------------------------

PreparedSources::PreparedSources(const Domain& dom, const SourceSample& s)
    : dom_(&dom), d_(dom.dim()), points_(s.points), sizes_(s.sizes) {
  if (s.points.size() != s.sizes.size()) throw RangeError("source sample sizes mismatch");
  normals_.reserve(points_.size() * static_cast<std::size_t>(d_));
  offsets_.reserve(points_.size());
  for (const CVec& w : points_) {
    const CVec n = unit_conormal(dom, w);
    for (int j = 0; j < d_; ++j) normals_.push_back(n[j]);
    offsets_.push_back(bilinear(n, w));
  }
  if (!sizes_.empty()) {
    delta_max_ = *std::max_element(sizes_.begin(), sizes_.end());
    delta_min_ = *std::min_element(sizes_.begin(), sizes_.end());
    if (!(delta_min_ > 0.0)) throw RangeError("source sizes must be positive");
  }
  margin_ = dom.convexity_margin();
  if (!points_.empty()) index_ = SpatialIndex(points_, search_radius(delta_max_));
}

double PreparedSources::search_radius(double level) const { return std::sqrt(level / margin_); }

// ---------------------------------------------------------------------------

bool cut_membership(const Domain& dom, const CVec& z, const CVec& w, double delta) {
  if (!(delta > 0.0)) throw RangeError("cut level must be positive");
  if (!dom.contains(z)) return false;
  return std::abs(boundary_functional(dom, z, w)) < delta;
}

std::optional<double> depth_from_pair(cplx a, cplx b, double delta) {
  const double aa = std::abs(a);
  if (aa > delta) return std::nullopt;
  const double bb = std::norm(b);
  if (bb < 1e-300) throw ExitThroughBoundaryError("normal ray never leaves the cut");
  // |a - t b|^2 = delta^2, larger root; the smaller one is <= 0 since |a| <= delta.
  const double p = (a * std::conj(b)).real();
  const double disc = p * p + bb * (delta * delta - aa * aa);
  return std::max(0.0, (p + std::sqrt(std::max(disc, 0.0))) / bb);
}

namespace {

void check_segment(const Domain& dom, const CVec& zeta, const CVec& eta, double t) {
  for (int k = 1; k <= 8; ++k) {
    const CVec p = zeta + (t * k / 8.0) * eta;
    if (dom.rho(p) > kBoundaryTol)
      throw ExitThroughBoundaryError("normal segment leaves the domain before the cut level");
  }
}

}  // namespace

std::optional<double> depth_along_normal(const Domain& dom, const CVec& zeta, const CVec& w,
                                         double delta) {
  if (!(delta > 0.0)) throw RangeError("cut level must be positive");
  if (delta > 0.2 * dom.bounding_radius())
    throw RangeError("depth needs delta <= 0.2 * bounding radius");
  const cplx a = boundary_functional(dom, zeta, w);
  if (std::abs(a) > delta) return std::nullopt;
  const CVec eta = inner_normal(dom, zeta);
  const cplx b = bilinear(unit_conormal(dom, w), eta);
  const auto t = depth_from_pair(a, b, delta);
  if (t && *t > 0.0) check_segment(dom, zeta, eta, *t);
  return t;
}

namespace {

// Depth field at zeta over a candidate span; returns max depth (>= 0).
template <class Cands>
double field_at(const PreparedSources& src, const CVec& zeta, const Cands& cands, double off,
                double reach) {
  const CVec eta = inner_normal(src.domain(), zeta);
  double best = 0.0;
  for (const auto& c : cands) {
    if (c.center_distance > reach + off) break;
    const int i = c.index;
    const cplx a = src.L(i, zeta);
    if (std::abs(a) > src.delta(i)) continue;
    const auto t = depth_from_pair(a, src.pair(i, eta), src.delta(i));
    if (t && *t > best) best = *t;
  }
  // Convexity: shorter segments along the same ray are prefixes of the longest one.
  if (best > 0.0) check_segment(src.domain(), zeta, eta, best);
  return best;
}

}  // namespace

double max_depth_field(const PreparedSources& src, const CVec& zeta) {
  return max_depth_field_batch(src, {zeta})[0];
}

std::vector<double> max_depth_field_batch(const PreparedSources& src,
                                          const std::vector<CVec>& zetas) {
  std::vector<double> out(zetas.size(), 0.0);
  if (src.empty()) return out;
  const double reach = src.search_radius(src.delta_max());
  src.index().batch(zetas, reach, [&](int qi, const CVec& z, auto cands, double off) {
    out[qi] = field_at(src, z, cands, off, reach);
  });
  return out;
}

bool visibility_membership(const Domain& dom, const CVec& w, const CVec& zeta,
                           const SizeFunction& s, long n, double t) {
  if (!(t >= 0.0)) throw RangeError("visibility needs t >= 0");
  const double delta = size_at(s, n, w);
  const auto r = depth_along_normal(dom, zeta, w, delta);
  // relative slack so the base point itself is visible at t = 1
  return r && *r >= t * delta * (1.0 - 1e-12);
}

// ---------------------------------------------------------------------------
// Nets

namespace {

/// Growing set of boundary centers with a hash grid for |L(s, c)| <= level queries.
/// Each cell stores (offset, conormal) rows contiguously.
class CenterSet {
 public:
  CenterSet(const Domain& dom, double level)
      : dom_(dom), d_(dom.dim()), stride_(2 + 2 * d_),
        edge_(std::sqrt(level / dom.convexity_margin())) {
    if (d_ > 4) throw RangeError("boundary nets support d <= 4");
    // neighbor offsets in {-1,0,1}^{2d}, nearest cells first
    const int dims = 2 * d_;
    int count = 1;
    for (int k = 0; k < dims; ++k) count *= 3;
    for (int c = 0; c < count; ++c) {
      std::vector<int> o(dims);
      for (int k = 0, r = c; k < dims; ++k, r /= 3) o[k] = r % 3 - 1;
      neighbors_.push_back(o);
    }
    std::stable_sort(neighbors_.begin(), neighbors_.end(), [](const auto& x, const auto& y) {
      int a = 0, b = 0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        a += std::abs(x[k]);
        b += std::abs(y[k]);
      }
      return a < b;
    });
  }

  // Smallest |L(s, c)| over centers within `level` reach, or +inf; stops early
  // once a value <= stop is seen.
  double nearest(const CVec& s, double stop) const {
    int base[8], cell[8];
    for (int k = 0; k < d_; ++k) {
      base[2 * k] = static_cast<int>(std::floor(s[k].real() / edge_));
      base[2 * k + 1] = static_cast<int>(std::floor(s[k].imag() / edge_));
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : neighbors_) {
      for (int k = 0; k < 2 * d_; ++k) cell[k] = base[k] + o[k];
      auto it = cells_.find(key(cell));
      if (it == cells_.end()) continue;
      const std::vector<double>& rows = buckets_[it->second];
      for (std::size_t r = 0; r < rows.size(); r += stride_) {
        const double* p = rows.data() + r;
        double re = p[0], im = p[1];
        for (int k = 0; k < d_; ++k) {
          const double nr = p[2 + 2 * k], ni = p[3 + 2 * k];
          const double sr = s[k].real(), si = s[k].imag();
          re -= nr * sr - ni * si;
          im -= nr * si + ni * sr;
        }
        const double v = std::hypot(re, im);
        if (v < best) {
          best = v;
          if (best <= stop) return best;
        }
      }
    }
    return best;
  }

  void add(const CVec& c) {
    const CVec n = unit_conormal(dom_, c);
    const cplx off = bilinear(n, c);
    int cell[8];
    for (int k = 0; k < d_; ++k) {
      cell[2 * k] = static_cast<int>(std::floor(c[k].real() / edge_));
      cell[2 * k + 1] = static_cast<int>(std::floor(c[k].imag() / edge_));
    }
    auto [it, fresh] = cells_.try_emplace(key(cell), static_cast<int>(buckets_.size()));
    if (fresh) buckets_.emplace_back();
    auto& rows = buckets_[it->second];
    rows.push_back(off.real());
    rows.push_back(off.imag());
    for (int k = 0; k < d_; ++k) {
      rows.push_back(n[k].real());
      rows.push_back(n[k].imag());
    }
    centers_.push_back(c);
  }

  std::vector<CVec>& centers() { return centers_; }
  std::size_t size() const { return centers_.size(); }

 private:
  const Domain& dom_;
  int d_;
  std::size_t stride_;
  double edge_;
  std::vector<std::vector<int>> neighbors_;
  std::unordered_map<std::uint64_t, int> cells_;
  std::vector<std::vector<double>> buckets_;
  std::vector<CVec> centers_;

  std::uint64_t key(const int* cell) const {
    std::uint64_t h = 0x13198A2E03707344ULL;
    for (int k = 0; k < 2 * d_; ++k) h = mix64(h ^ static_cast<std::uint32_t>(cell[k]));
    return h;
  }
};

// Greedy packing at squared radius `pack` from `draw`; stops after factor * m
// consecutive draws that already lie within squared radius `cover` of a center.
template <class Draw>
long saturate(CenterSet& set, Draw&& draw, double pack, double cover, long factor,
              std::size_t cap) {
  long consecutive = 0, total = 0;
  for (;;) {
    const long limit = factor * static_cast<long>(std::max<std::size_t>(set.size(), 1));
    if (consecutive >= limit) break;
    const CVec s = draw();
    ++total;
    const double v = set.nearest(s, pack);
    if (v > pack) {
      set.add(s);
      if (set.size() > cap) break;
    }
    consecutive = v > cover ? 0 : consecutive + 1;
  }
  return total;
}

}  // namespace

BoundaryNet build_net(const Domain& dom, double rho_net, Seed128 seed, NetOptions opt) {
  if (!(rho_net > 0.0)) throw RangeError("net radius must be positive");
  if (!(opt.packing_factor > 0.0 && opt.packing_factor <= 1.0))
    throw RangeError("packing factor must lie in (0, 1]");
  const double cover = rho_net * rho_net;
  const double pack = cover * opt.packing_factor * opt.packing_factor;
  CenterSet set(dom, cover);
  RngStream stream(seed, mix64(0x6e6574ULL ^ std::bit_cast<std::uint64_t>(rho_net)));
  auto draw = [&] { return sample_uniform_boundary(dom, stream); };
  BoundaryNet net;
  net.rho_net = rho_net;
  net.packing_radius = opt.packing_factor * rho_net / (2.0 * dom.quasimetric_constant());
  long factor = opt.rejection_factor;
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    net.stream_samples += saturate(set, draw, pack, cover, factor, static_cast<std::size_t>(-1));
    RngStream audit = stream.derive(0x61756469740000ULL + static_cast<std::uint64_t>(attempt));
    // uncovered audit points join the net (they are farther than rho_net from
    // every center); a clean audit ends the construction
    long misses = 0;
    for (int i = 0; i < opt.audit_points; ++i) {
      const CVec s = sample_uniform_boundary(dom, audit);
      if (set.nearest(s, cover) > cover) {
        set.add(s);
        ++misses;
      }
    }
    net.stream_samples += opt.audit_points;
    if (misses == 0) {
      net.centers = std::move(set.centers());
      return net;
    }
    factor *= 2;
  }
  throw NetConstructionError("net failed its covering audit after retries");
}

namespace {

struct NetEntry {
  std::once_flag once;
  std::shared_ptr<const BoundaryNet> net;
};
std::mutex net_cache_mu;
std::map<std::string, std::shared_ptr<NetEntry>> net_cache;

}  // namespace

void clear_net_cache() {
  std::lock_guard<std::mutex> lock(net_cache_mu);
  net_cache.clear();
}

std::shared_ptr<const BoundaryNet> cached_net(const Domain& dom, double rho_net, Seed128 seed) {

  const int k = static_cast<int>(std::floor(8.0 * std::log2(rho_net)));
  const double rung = std::exp2(k / 8.0);
  const std::string key = dom.id() + "|" + std::to_string(k) + "|" + seed.to_hex();
  std::shared_ptr<NetEntry> e;
  {
    std::lock_guard<std::mutex> lock(net_cache_mu);
    auto& slot = net_cache[key];
    if (!slot) slot = std::make_shared<NetEntry>();
    e = slot;
  }
  std::call_once(e->once, [&] {
    e->net = std::make_shared<const BoundaryNet>(build_net(dom, rung, seed));
  });
  return e->net;
}

// ---------------------------------------------------------------------------
// Coverage

std::string to_string(CoverageStatus s) {
  switch (s) {
    case CoverageStatus::Covered: return "covered";
    case CoverageStatus::NotCovered: return "not-covered";
    case CoverageStatus::Uncertain: return "uncertain";
  }
  return "uncertain";
}

std::string CoverageVerdict::to_json() const {
  nlohmann::json j;
  j["status"] = to_string(status);
  j["uncertain_fraction"] = uncertain_fraction;
  j["net_size"] = net_size;
  j["band"] = band;
  auto& w = j["witnesses"] = nlohmann::json::array();
  for (const CVec& p : witnesses) {
    nlohmann::json pt = nlohmann::json::array();
    for (Eigen::Index k = 0; k < p.size(); ++k) pt.push_back({p[k].real(), p[k].imag()});
    w.push_back(pt);
  }
  return j.dump();
}

namespace {

// min_i |L(p, w_i)| / delta_i over candidates (the squared normalized distance),
// stopping once a value <= stop is seen.
template <class Cands>
double mu_squared(const PreparedSources& src, const CVec& p, const Cands& cands, double off,
                  double reach, double stop) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cands) {
    if (c.center_distance > reach + off) break;
    const double v = std::abs(src.L(c.index, p)) / src.delta(c.index);
    if (v < best) {
      best = v;
      if (best <= stop) break;
    }
  }
  return best;
}

double mu_squared_single(const PreparedSources& src, const CVec& p, double stop) {
  double best = std::numeric_limits<double>::infinity();
  src.index().batch({p}, src.search_radius(src.delta_max()),
                    [&](int, const CVec& z, auto cands, double off) {
                      best = mu_squared(src, z, cands, off, src.search_radius(src.delta_max()),
                                        stop);
                    });
  return best;
}

struct LocalFrame {
  RVec normal, reeb;
};

LocalFrame frame_at(const Domain& dom, const CVec& p) {
  const RVec g = dom.real_gradient(p);
  LocalFrame f{g / g.norm(), RVec(g.size())};
  for (Eigen::Index j = 0; j < g.size() / 2; ++j) {
    f.reeb[2 * j] = -f.normal[2 * j + 1];
    f.reeb[2 * j + 1] = f.normal[2 * j];
  }
  return f;
}

// Boundary point in S(p; rho^2), drawn in tangent coordinates scaled to the cap shape.
CVec local_draw(const Domain& dom, const CVec& p, const LocalFrame& f, double rho,
                RngStream& rng) {
  const int n = static_cast<int>(f.normal.size());
  const double spread = rho / std::sqrt(dom.convexity_margin());
  for (int attempt = 0; attempt < 1000; ++attempt) {
    RVec v(n);
    for (int k = 0; k < n; ++k) v[k] = rng.normal();
    v -= v.dot(f.normal) * f.normal;
    v -= v.dot(f.reeb) * f.reeb;
    const double vn = v.norm();
    if (vn == 0.0) continue;
    const double r = spread * std::pow(rng.uniform(), 1.0 / (n - 2));
    const double s = rho * rho * (2.0 * rng.uniform() - 1.0);
    const RVec x = to_real(p) + (r / vn) * v + s * f.reeb;
    const CVec q = project_to_boundary(dom, to_complex(x));
    if (std::abs(dom.rho(q)) > kBoundaryTol) continue;
    if (std::abs(boundary_functional(dom, q, p)) <= rho * rho) return q;
  }
  return p;
}

double covered_threshold(double q, double rho, double sqrt_dmin) {
  const double t = (1.0 - q * rho / sqrt_dmin) / q;
  return t > 0 ? t * t : -1.0;
}

struct BandPoint {
  CVec p;
  int root;  // index of the net point it descends from
};

}  // namespace

CoverageVerdict coverage_test(const PreparedSources& src, Seed128 seed, CoverageOptions opt) {
  const Domain& dom = src.domain();
  CoverageVerdict v;
  if (src.empty()) {
    v.status = CoverageStatus::NotCovered;
    return v;
  }
  const double reach = src.search_radius(src.delta_max());
  const double q = dom.quasimetric_constant();

  // Cheap random probes settle most uncovered configurations.
  {
    RngStream rng(seed, mix64(0x70726f6265ULL));
    std::vector<CVec> probes(static_cast<std::size_t>(opt.probes));
    for (auto& p : probes) p = sample_uniform_boundary(dom, rng);
    std::optional<CVec> hit;
    src.index().batch(probes, reach, [&](int, const CVec& z, auto cands, double off) {
      if (hit) return;
      if (mu_squared(src, z, cands, off, reach, 1.0) > 1.0 + 1e-12) hit = z;
    });
    if (hit) {
      v.status = CoverageStatus::NotCovered;
      v.witnesses.push_back(*hit);
      return v;
    }
  }

  const auto net = cached_net(dom, opt.net_factor * std::sqrt(src.delta_min()), seed);
  v.net_size = static_cast<long>(net->centers.size());
  const double sqrt_dmin = std::sqrt(src.delta_min());
  double rho = net->rho_net;
  double tau = covered_threshold(q, rho, sqrt_dmin);

  std::vector<BandPoint> band;
  std::optional<CVec> hit;
  src.index().batch(net->centers, reach, [&](int qi, const CVec& z, auto cands, double off) {
    if (hit) return;
    const double mu2 = mu_squared(src, z, cands, off, reach, tau);
    if (mu2 > 1.0 + 1e-12) {
      hit = z;
    } else if (!(mu2 <= tau)) {
      band.push_back({z, qi});
    }
  });
  if (hit) {
    v.status = CoverageStatus::NotCovered;
    v.witnesses.push_back(*hit);
    return v;
  }
  std::sort(band.begin(), band.end(), [](const auto& a, const auto& b) { return a.root < b.root; });
  v.band = static_cast<long>(band.size());

  // Level by level: one shared sub-net at radius rho/sqrt(2) over the caps of
  // all band points, so overlapping caps are not sampled twice.
  for (int level = 1; level <= opt.refine_levels && !band.empty(); ++level) {
    const double child = rho / std::sqrt(2.0);
    const double child_tau = covered_threshold(q, child, sqrt_dmin);
    CenterSet set(dom, child * child);
    std::vector<int> roots;
    RngStream rng(seed, mix64(0x726566696e65ULL ^ static_cast<std::uint64_t>(level)));
    const long limit = static_cast<long>(opt.refine_rejection_factor) * opt.refine_points;
    for (const BandPoint& b : band) {
      const LocalFrame f = frame_at(dom, b.p);
      const std::size_t before = set.size();
      long consecutive = 0;
      while (consecutive < limit) {
        const CVec s = local_draw(dom, b.p, f, rho, rng);
        const double d = set.nearest(s, 0.81 * child * child);
        if (d > 0.81 * child * child) {
          set.add(s);
          roots.push_back(b.root);
          if (set.size() - before > static_cast<std::size_t>(opt.refine_points)) break;
        }
        consecutive = d > child * child ? 0 : consecutive + 1;
      }
    }
    std::vector<BandPoint> next;
    const auto& centers = set.centers();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double mu2 = mu_squared_single(src, centers[i], child_tau);
      if (mu2 > 1.0 + 1e-12) {
        v.status = CoverageStatus::NotCovered;
        v.witnesses.push_back(centers[i]);
        return v;
      }
      if (!(mu2 <= child_tau)) next.push_back({centers[i], roots[i]});
    }
    band = std::move(next);
    rho = child;
  }

  std::vector<int> roots;
  for (const auto& b : band) roots.push_back(b.root);
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  for (std::size_t i = 0; i < band.size() && v.witnesses.size() < 16; ++i)
    v.witnesses.push_back(band[i].p);
  v.uncertain_fraction = static_cast<double>(roots.size()) / static_cast<double>(v.net_size);
  v.status = band.empty() ? CoverageStatus::Covered : CoverageStatus::Uncertain;
  return v;
}

long uncovered_count(const PreparedSources& src, const std::vector<CVec>& boundary_points) {
  if (src.empty()) return static_cast<long>(boundary_points.size());
  const double reach = src.search_radius(src.delta_max());
  long count = 0;
  src.index().batch(boundary_points, reach, [&](int, const CVec& z, auto cands, double off) {
    if (mu_squared(src, z, cands, off, reach, 1.0) > 1.0) ++count;
  });
  return count;
}

}  // namespace ccvx
