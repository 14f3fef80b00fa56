#pragma once

#include <cmath>
#include <vector>

#include "bvpc/core/octree.hpp"
#include "bvpc/geom/bezier_volume.hpp"

namespace bvpc {

// Signed distances at the unique corners of every cubic level, positive
// outside the surface and negative inside. values[l][c] pairs with
// octree.corners(l).coords[c].
struct SdfField {
  std::vector<std::vector<double>> values;
};

// Control point at each corner: distance to the nearest voxel among the
// voxels of the occupied blocks (at the same level) sharing that corner,
// signed by the direction of that voxel's normal.
inline SdfField compute_sdf(const VoxelCloud& cloud, const OctreeLevels& octree) {
  if (!cloud.has_normals()) throw std::runtime_error("compute_sdf: normals required");
  SdfField field;
  field.values.resize(octree.depth() + 1);
  for (int l = 0; l <= octree.depth(); ++l) {
    const auto& cs = octree.corners(l);
    const auto& blocks = octree.cubic_level(l);
    auto& vals = field.values[l];
    vals.resize(cs.size());
    for (size_t c = 0; c < cs.size(); ++c) {
      const double cx = cs.coords[c][0], cy = cs.coords[c][1], cz = cs.coords[c][2];
      double best = std::numeric_limits<double>::infinity();
      size_t best_i = 0;
      for (int32_t pos = cs.incidence_offsets[c]; pos < cs.incidence_offsets[c + 1]; ++pos) {
        const auto& b = blocks[cs.incidence_blocks[pos]];
        for (uint32_t i = b.begin; i < b.end; ++i) {
          const double dx = cx - cloud.positions[i][0];
          const double dy = cy - cloud.positions[i][1];
          const double dz = cz - cloud.positions[i][2];
          const double d2 = dx * dx + dy * dy + dz * dz;
          if (d2 < best) {
            best = d2;
            best_i = i;
          }
        }
      }
      const auto& n = cloud.normals[best_i];
      const double dx = cx - cloud.positions[best_i][0];
      const double dy = cy - cloud.positions[best_i][1];
      const double dz = cz - cloud.positions[best_i][2];
      const double dot = dx * n[0] + dy * n[1] + dz * n[2];
      const double dist = std::sqrt(best);
      vals[c] = dot < 0.0 ? -dist : dist;
    }
  }
  return field;
}

// Tri-linear prediction of a child-corner value from the eight reconstructed
// corners of one containing parent block: the mean of 2 corners for an edge
// midpoint, 4 for a face center, 8 for the block center. Corners on the
// parent lattice carry over unchanged.
inline double predict_child(const std::array<double, 8>& parent, double tx, double ty,
                            double tz) {
  return trilerp(parent, tx, ty, tz);
}

}  // namespace bvpc
