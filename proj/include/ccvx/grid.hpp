#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "ccvx/types.hpp"

namespace ccvx {

/// Uniform grid over R^{2d} holding a fixed point set. Queries are answered in
/// batches grouped by a finer query cell so the candidate gathering and
/// sorting is shared by every query that lands in the same cell.
class SpatialIndex {
 public:
  struct Candidate {
    int index;
    double center_distance;  // distance from the source to the query-cell center
  };

  SpatialIndex() = default;
  /// `radius` is the typical search radius; it fixes both cell sizes.
  SpatialIndex(const std::vector<CVec>& points, double radius);

  std::size_t size() const { return points_.size(); }
  double radius() const { return radius_; }

  /// For each query, calls visit(query_index, z, candidates, center_offset) where
  /// candidates hold every point within `radius` of z, sorted by distance to the
  /// cell center, and center_offset = |z - center|. A candidate with
  /// center_distance > radius + center_offset can be skipped along with the rest.
  template <class Visit>
  void batch(const std::vector<CVec>& queries, double radius, Visit&& visit) const;

  /// Every point within `radius` of z (unsorted).
  std::vector<int> within(const CVec& z, double radius) const;

 private:
  using Key = std::uint64_t;
  std::vector<RVec> points_;
  int n_ = 0;  // real dimension
  double radius_ = 0, fine_ = 1, coarse_ = 1;
  std::unordered_map<Key, std::vector<int>> coarse_cells_;

  Key key_of(const int* cell) const;
  void gather(const RVec& center, double reach, std::vector<Candidate>& out) const;
};

// ---------------------------------------------------------------------------

template <class Visit>
void SpatialIndex::batch(const std::vector<CVec>& queries, double radius, Visit&& visit) const {
  if (queries.empty()) return;
  const int nq = static_cast<int>(queries.size());
  std::vector<RVec> q(queries.size());
  std::vector<std::pair<Key, int>> order(queries.size());
  std::vector<int> cell(static_cast<std::size_t>(n_));
  for (int i = 0; i < nq; ++i) {
    q[i] = to_real(queries[i]);
    for (int k = 0; k < n_; ++k) cell[k] = static_cast<int>(std::floor(q[i][k] / fine_));
    order[i] = {key_of(cell.data()), i};
  }
  std::sort(order.begin(), order.end());

  const double half_diag = 0.5 * fine_ * std::sqrt(static_cast<double>(n_));
  std::vector<Candidate> cands;
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start;
    // Group by full cell coordinates; equal keys with different cells are split by a recheck.
    const int first = order[start].second;
    for (int k = 0; k < n_; ++k) cell[k] = static_cast<int>(std::floor(q[first][k] / fine_));
    RVec center(n_);
    for (int k = 0; k < n_; ++k) center[k] = (cell[k] + 0.5) * fine_;
    while (stop < order.size() && order[stop].first == order[start].first) ++stop;

    cands.clear();
    gather(center, radius + half_diag, cands);
    for (std::size_t j = start; j < stop; ++j) {
      const int qi = order[j].second;
      const double off = (q[qi] - center).norm();
      if (off > half_diag * (1.0 + 1e-12)) {
        // Hash collision with a different cell: fall back to an exact gather.
        std::vector<Candidate> own;
        gather(q[qi], radius, own);
        visit(qi, queries[qi], std::span<const Candidate>(own), 0.0);
        continue;
      }
      visit(qi, queries[qi], std::span<const Candidate>(cands), off);
    }
    start = stop;
  }
}

}  // namespace ccvx
