#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>

#include "bvpc/core/octree.hpp"

namespace bvpc {

// Counting-measure inner product: sum of pointwise products over the support.
inline double inner_product(const std::vector<double>& f, const std::vector<double>& g) {
  if (f.size() != g.size()) throw std::runtime_error("inner_product: length mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
  return acc;
}

// 1-D hat: 1 at the center, linear to 0 at distance h.
inline double hat1(double x, double center, double h) {
  const double t = std::abs(x - center) / h;
  return t >= 1.0 ? 0.0 : 1.0 - t;
}

enum class BasisOrder { constant = 1, trilinear = 2 };

// Basis function evaluation in voxel units.
//  - order 1: indicator of the (possibly cuboid) block at a binary level
//  - order 2: product of 1-D hats centered on a corner of the cubic lattice
//    at level `l`, with support width 2*2^(d-l) per axis
struct BasisSpec {
  BasisOrder order;
  int level;  // binary level for order 1, cubic level for order 2
  int depth;

  double eval_block(const Vec3u& origin, const std::array<uint32_t, 3>& size,
                    const Vec3d& x) const {
    for (int a = 0; a < 3; ++a)
      if (x[a] < origin[a] || x[a] >= origin[a] + static_cast<double>(size[a])) return 0.0;
    return 1.0;
  }

  double eval_hat(const Vec3u& corner, const Vec3d& x) const {
    const double h = static_cast<double>(1u << (depth - level));
    return hat1(x[0], corner[0], h) * hat1(x[1], corner[1], h) * hat1(x[2], corner[2], h);
  }
};

// Evaluation matrix of the order-2 hats at a cubic level: rows are cloud
// points, columns are the corners at that level. Each point sees exactly the
// eight corners of its containing cell, so rows have at most 8 nonzeros.
inline Eigen::SparseMatrix<double> eval_matrix_p2(const VoxelCloud& cloud,
                                                  const OctreeLevels& octree, int level) {
  const auto& cs = octree.corners(level);
  const double h = static_cast<double>(1u << (cloud.depth - level));
  Eigen::SparseMatrix<double> E(static_cast<int>(cloud.size()), static_cast<int>(cs.size()));
  std::vector<Eigen::Triplet<double>> trips;
  const auto& blocks = octree.cubic_level(level);
  for (size_t b = 0; b < blocks.size(); ++b) {
    for (uint32_t i = blocks[b].begin; i < blocks[b].end; ++i) {
      const Vec3d x{static_cast<double>(cloud.positions[i][0]),
                    static_cast<double>(cloud.positions[i][1]),
                    static_cast<double>(cloud.positions[i][2])};
      for (int c = 0; c < 8; ++c) {
        const int32_t id = cs.block_corners[b][c];
        const auto& corner = cs.coords[id];
        const double v = hat1(x[0], corner[0], h) * hat1(x[1], corner[1], h) *
                         hat1(x[2], corner[2], h);
        if (v != 0.0) trips.emplace_back(static_cast<int>(i), id, v);
      }
    }
  }
  E.setFromTriplets(trips.begin(), trips.end());
  return E;
}

// Evaluation matrix of the order-1 block indicators at a binary level.
inline Eigen::SparseMatrix<double> eval_matrix_p1(const VoxelCloud& cloud,
                                                  const OctreeLevels& octree, int binary_level) {
  const auto& blocks = octree.binary_level(binary_level);
  Eigen::SparseMatrix<double> E(static_cast<int>(cloud.size()), static_cast<int>(blocks.size()));
  std::vector<Eigen::Triplet<double>> trips;
  for (size_t b = 0; b < blocks.size(); ++b)
    for (uint32_t i = blocks[b].begin; i < blocks[b].end; ++i)
      trips.emplace_back(static_cast<int>(i), static_cast<int>(b), 1.0);
  E.setFromTriplets(trips.begin(), trips.end());
  return E;
}

}  // namespace bvpc
