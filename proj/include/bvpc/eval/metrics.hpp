#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "bvpc/core/voxel_cloud.hpp"
#include "bvpc/geom/nn.hpp"

namespace bvpc {

// Sentinel PSNR reported for a zero-error comparison.
constexpr double kPsnrCap = 999.0;

// Point-to-point geometry PSNR: symmetric nearest-neighbor MSE against the
// squared diagonal of the voxel grid as peak.
inline double psnr_d1(const VoxelCloud& reference, const VoxelCloud& test) {
  if (reference.depth != test.depth) throw std::runtime_error("psnr_d1: depth mismatch");
  if (reference.size() == 0 || test.size() == 0)
    throw std::runtime_error("psnr_d1: empty cloud");
  auto one_way = [](const VoxelCloud& a, const VoxelCloud& b) {
    VoxelNnIndex index(b.positions);
    double acc = 0.0;
    for (const auto& p : a.positions) acc += static_cast<double>(index.nearest_sq(p));
    return acc / static_cast<double>(a.size());
  };
  const double mse = std::max(one_way(reference, test), one_way(test, reference));
  if (mse == 0.0) return kPsnrCap;
  const double side = static_cast<double>((1u << reference.depth) - 1);
  return 10.0 * std::log10(3.0 * side * side / mse);
}

inline double luma709(const double* rgb) {
  return 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2];
}

// Luma PSNR between attribute matrices on the same voxel set and ordering,
// peak 255. Three-channel inputs are treated as RGB; single-channel inputs
// are taken as luma directly.
inline double psnr_y(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& test) {
  if (reference.rows() != test.rows() || reference.cols() != test.cols())
    throw std::runtime_error("psnr_y: length mismatch");
  if (reference.rows() == 0) throw std::runtime_error("psnr_y: empty attributes");
  double mse = 0.0;
  for (Eigen::Index i = 0; i < reference.rows(); ++i) {
    double yr, yt;
    if (reference.cols() >= 3) {
      const double r[3] = {reference(i, 0), reference(i, 1), reference(i, 2)};
      const double t[3] = {test(i, 0), test(i, 1), test(i, 2)};
      yr = luma709(r);
      yt = luma709(t);
    } else {
      yr = reference(i, 0);
      yt = test(i, 0);
    }
    mse += (yr - yt) * (yr - yt);
  }
  mse /= static_cast<double>(reference.rows());
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace bvpc
