#include "ccvx/grid.hpp"

#include <algorithm>
#include <cmath>

#include "ccvx/rng.hpp"

namespace ccvx {

SpatialIndex::SpatialIndex(const std::vector<CVec>& points, double radius) : radius_(radius) {
  if (!(radius > 0.0)) throw RangeError("spatial index radius must be positive");
  if (points.empty()) return;
  n_ = static_cast<int>(2 * points.front().size());
  fine_ = radius / 2.0;
  coarse_ = radius + 0.5 * fine_ * std::sqrt(static_cast<double>(n_));
  points_.reserve(points.size());
  std::vector<int> cell(static_cast<std::size_t>(n_));
  for (std::size_t i = 0; i < points.size(); ++i) {
    points_.push_back(to_real(points[i]));
    for (int k = 0; k < n_; ++k) cell[k] = static_cast<int>(std::floor(points_[i][k] / coarse_));
    coarse_cells_[key_of(cell.data())].push_back(static_cast<int>(i));
  }
}

SpatialIndex::Key SpatialIndex::key_of(const int* cell) const {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (int k = 0; k < n_; ++k) h = mix64(h ^ static_cast<std::uint32_t>(cell[k]));
  return h;
}

void SpatialIndex::gather(const RVec& center, double reach, std::vector<Candidate>& out) const {
  if (points_.empty()) return;
  std::vector<int> lo(static_cast<std::size_t>(n_)), hi(lo.size()), cur(lo.size());
  for (int k = 0; k < n_; ++k) {
    lo[k] = static_cast<int>(std::floor((center[k] - reach) / coarse_));
    hi[k] = static_cast<int>(std::floor((center[k] + reach) / coarse_));
    cur[k] = lo[k];
  }
  std::vector<Key> seen;
  const double reach2 = reach * reach;
  for (;;) {
    const Key key = key_of(cur.data());
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
      seen.push_back(key);
      auto it = coarse_cells_.find(key);
      if (it != coarse_cells_.end()) {
        for (int idx : it->second) {
          const double d2 = (points_[idx] - center).squaredNorm();
          if (d2 <= reach2) out.push_back({idx, std::sqrt(d2)});
        }
      }
    }
    int k = 0;
    while (k < n_ && ++cur[k] > hi[k]) {
      cur[k] = lo[k];
      ++k;
    }
    if (k == n_) break;
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return a.center_distance < b.center_distance ||
           (a.center_distance == b.center_distance && a.index < b.index);
  });
}

std::vector<int> SpatialIndex::within(const CVec& z, double radius) const {
  std::vector<Candidate> c;
  gather(to_real(z), radius, c);
  std::vector<int> out;
  out.reserve(c.size());
  for (const auto& x : c) out.push_back(x.index);
  return out;
}

}  // namespace ccvx
