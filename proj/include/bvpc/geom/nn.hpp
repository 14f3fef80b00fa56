#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_set>
#include <vector>

#include "bvpc/core/voxel_cloud.hpp"

namespace bvpc {

// Exact nearest-neighbor queries between integer voxel sets via a hashed
// occupancy grid and expanding Chebyshev shells. Queries warm-start from the
// previous answer, which keeps shells small for Morton-coherent inputs.
class VoxelNnIndex {
 public:
  explicit VoxelNnIndex(const std::vector<Vec3u>& points) : points_(points) {
    cells_.reserve(points.size() * 2);
    for (const auto& p : points) cells_.insert(key(p[0], p[1], p[2]));
  }

  bool empty() const { return points_.empty(); }

  // squared distance from q to the nearest point of the set
  int64_t nearest_sq(const Vec3u& q) const {
    if (points_.empty()) return std::numeric_limits<int64_t>::max();
    int64_t best = std::numeric_limits<int64_t>::max();
    if (have_prev_) {
      const int64_t dx = static_cast<int64_t>(q[0]) - prev_[0];
      const int64_t dy = static_cast<int64_t>(q[1]) - prev_[1];
      const int64_t dz = static_cast<int64_t>(q[2]) - prev_[2];
      best = dx * dx + dy * dy + dz * dz;
    }
    Vec3u best_p = prev_;
    for (int64_t r = 0;; ++r) {
      if (r * r >= best && best != std::numeric_limits<int64_t>::max()) break;
      bool any_cell = false;
      for (int64_t dx = -r; dx <= r; ++dx)
        for (int64_t dy = -r; dy <= r; ++dy)
          for (int64_t dz = -r; dz <= r; ++dz) {
            if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != r) continue;
            const int64_t x = q[0] + dx, y = q[1] + dy, z = q[2] + dz;
            if (x < 0 || y < 0 || z < 0) continue;
            any_cell = true;
            if (!cells_.count(key(static_cast<uint32_t>(x), static_cast<uint32_t>(y),
                                  static_cast<uint32_t>(z))))
              continue;
            const int64_t d2 = dx * dx + dy * dy + dz * dz;
            if (d2 < best) {
              best = d2;
              best_p = {static_cast<uint32_t>(x), static_cast<uint32_t>(y),
                        static_cast<uint32_t>(z)};
            }
          }
      if (!any_cell && r > 0 && best == std::numeric_limits<int64_t>::max() &&
          r > (1ll << 22))
        break;  // unreachable in practice; guards an empty universe
    }
    prev_ = best_p;
    have_prev_ = true;
    return best;
  }

 private:
  static uint64_t key(uint32_t x, uint32_t y, uint32_t z) {
    return (static_cast<uint64_t>(x) << 42) | (static_cast<uint64_t>(y) << 21) |
           static_cast<uint64_t>(z);
  }
  std::vector<Vec3u> points_;
  std::unordered_set<uint64_t> cells_;
  mutable Vec3u prev_{0, 0, 0};
  mutable bool have_prev_ = false;
};

// Sum of squared nearest-neighbor distances from every point of `from` to
// the set `to`; infinity if exactly one side is empty, zero if both are.
inline double nn_sum_squared(const std::vector<Vec3u>& from, const std::vector<Vec3u>& to) {
  if (from.empty() && to.empty()) return 0.0;
  if (from.empty() || to.empty()) return std::numeric_limits<double>::infinity();
  VoxelNnIndex index(to);
  double acc = 0.0;
  for (const auto& p : from) acc += static_cast<double>(index.nearest_sq(p));
  return acc;
}

}  // namespace bvpc
