#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bvpc/core/morton.hpp"

namespace bvpc {

using Vec3u = std::array<uint32_t, 3>;
using Vec3d = std::array<double, 3>;

// Deduplicated integer voxel positions at bit depth `depth`, kept in strictly
// increasing Morton order, with optional per-voxel attribute vectors and unit
// normals.
struct VoxelCloud {
  int depth = 0;
  std::vector<Vec3u> positions;     // Morton-sorted, no duplicates
  int attr_dim = 0;
  std::vector<double> attributes;   // size() == positions.size() * attr_dim
  std::vector<Vec3d> normals;       // empty, or one unit vector per position

  size_t size() const { return positions.size(); }
  bool has_normals() const { return !normals.empty(); }

  uint64_t morton(size_t i) const {
    return morton_encode(positions[i][0], positions[i][1], positions[i][2], depth);
  }
  const double* attr(size_t i) const { return attributes.data() + i * attr_dim; }
  double* attr(size_t i) { return attributes.data() + i * attr_dim; }

  // Checks the structural invariants; throws on violation.
  void validate() const {
    const uint32_t limit = 1u << depth;
    uint64_t prev = 0;
    for (size_t i = 0; i < positions.size(); ++i) {
      const auto& p = positions[i];
      if (p[0] >= limit || p[1] >= limit || p[2] >= limit)
        throw std::runtime_error("VoxelCloud: coordinate out of range");
      const uint64_t m = morton(i);
      if (i > 0 && m <= prev) throw std::runtime_error("VoxelCloud: Morton order violated");
      prev = m;
    }
    if (attributes.size() != positions.size() * static_cast<size_t>(attr_dim))
      throw std::runtime_error("VoxelCloud: attribute size mismatch");
    if (!normals.empty()) {
      if (normals.size() != positions.size())
        throw std::runtime_error("VoxelCloud: normal count mismatch");
      for (const auto& n : normals) {
        const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        if (std::abs(len - 1.0) > 1e-6)
          throw std::runtime_error("VoxelCloud: normal not unit length");
      }
    }
  }
};

// Axis-aligned bounding cube used to map real-valued points onto the grid.
struct BoundingCube {
  Vec3d origin{0.0, 0.0, 0.0};
  double side = 1.0;

  // Smallest cube containing all points, anchored at the componentwise
  // minimum. A relative pad keeps the max-corner points strictly inside.
  static BoundingCube fit(const std::vector<Vec3d>& points) {
    if (points.empty()) throw std::runtime_error("BoundingCube::fit: empty input");
    Vec3d lo = points[0], hi = points[0];
    for (const auto& p : points)
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    double side = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
    if (side <= 0.0) side = 1.0;
    return {lo, side * (1.0 + 1e-9)};
  }
};

// Scales points into [0, 2^depth)^3, floors them to integer voxels, merges
// duplicates by attribute mean, and emits a Morton-sorted cloud. Ties on cell
// boundaries resolve by flooring.
inline VoxelCloud voxelize(const std::vector<Vec3d>& points,
                           const std::vector<double>& attrs, int attr_dim,
                           const std::vector<Vec3d>& normals, int depth,
                           const BoundingCube& box) {
  if (points.empty()) throw std::runtime_error("voxelize: empty input");
  if (attr_dim > 0 && attrs.size() != points.size() * static_cast<size_t>(attr_dim))
    throw std::runtime_error("voxelize: attribute size mismatch");
  if (!normals.empty() && normals.size() != points.size())
    throw std::runtime_error("voxelize: normal count mismatch");

  const double scale = static_cast<double>(1u << depth) / box.side;
  const uint32_t maxc = (1u << depth) - 1;

  struct Entry {
    uint64_t code;
    uint32_t index;
  };
  std::vector<Entry> entries(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    Vec3u v;
    for (int a = 0; a < 3; ++a) {
      double t = (points[i][a] - box.origin[a]) * scale;
      long long c = static_cast<long long>(std::floor(t));
      v[a] = static_cast<uint32_t>(std::clamp(c, 0ll, static_cast<long long>(maxc)));
    }
    entries[i] = {morton_encode(v[0], v[1], v[2], depth), static_cast<uint32_t>(i)};
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.code < b.code; });

  VoxelCloud cloud;
  cloud.depth = depth;
  cloud.attr_dim = attr_dim;
  const bool with_normals = !normals.empty();
  size_t i = 0;
  while (i < entries.size()) {
    size_t j = i;
    while (j < entries.size() && entries[j].code == entries[i].code) ++j;
    const auto xyz = morton_decode(entries[i].code);
    cloud.positions.push_back(xyz);
    const double inv = 1.0 / static_cast<double>(j - i);
    for (int k = 0; k < attr_dim; ++k) {
      double sum = 0.0;
      for (size_t t = i; t < j; ++t) sum += attrs[entries[t].index * attr_dim + k];
      cloud.attributes.push_back(sum * inv);
    }
    if (with_normals) {
      Vec3d n{0, 0, 0};
      for (size_t t = i; t < j; ++t)
        for (int a = 0; a < 3; ++a) n[a] += normals[entries[t].index][a];
      double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      if (len < 1e-12) {
        n = normals[entries[i].index];  // cancelling normals: keep the first
        len = 1.0;
      }
      for (int a = 0; a < 3; ++a) n[a] /= len;
      cloud.normals.push_back(n);
    }
    i = j;
  }
  return cloud;
}

// Builds a cloud directly from integer voxel positions (deduplicated, sorted).
inline VoxelCloud make_cloud(int depth, std::vector<Vec3u> positions,
                             std::vector<double> attributes = {}, int attr_dim = 0,
                             std::vector<Vec3d> normals = {}) {
  const size_t n = positions.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<uint64_t> codes(n);
  for (size_t i = 0; i < n; ++i)
    codes[i] = morton_encode(positions[i][0], positions[i][1], positions[i][2], depth);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return codes[a] < codes[b]; });

  VoxelCloud cloud;
  cloud.depth = depth;
  cloud.attr_dim = attr_dim;
  for (size_t r = 0; r < n; ++r) {
    const size_t i = order[r];
    if (r > 0 && codes[i] == codes[order[r - 1]]) continue;
    cloud.positions.push_back(positions[i]);
    for (int k = 0; k < attr_dim; ++k) cloud.attributes.push_back(attributes[i * attr_dim + k]);
    if (!normals.empty()) cloud.normals.push_back(normals[i]);
  }
  return cloud;
}

}  // namespace bvpc
