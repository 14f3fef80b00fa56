#pragma once

#include <string>

#include "bvpc/attr/codec.hpp"
#include "bvpc/attr/raht.hpp"
#include "bvpc/eval/metrics.hpp"
#include "bvpc/geom/normals.hpp"
#include "bvpc/geom/pruning.hpp"
#include "bvpc/math/gram.hpp"

namespace bvpc {

struct CompactionPoint {
  int level = 0;
  long long coefficients = 0;  // transform coefficients below the cut
  double y_psnr = 0.0;
};

// Energy-compaction curve: reconstruction quality after zeroing all detail
// coefficients at levels >= L, for L = 0..d. Exact analysis followed by
// zeroed synthesis equals the least-squares projection onto the level-L
// space, so each point is computed by a sparse projection solve; the
// coefficient count is the dimension of that space.
inline std::vector<CompactionPoint> energy_compaction_sweep(const VoxelCloud& cloud,
                                                            const OctreeLevels& octree,
                                                            BasisOrder order) {
  Eigen::MatrixXd values = cloud_attributes(cloud);
  if (cloud.attr_dim == 3) values = rgb_to_yuv(values);
  std::vector<CompactionPoint> out;
  const int d = cloud.depth;

  if (order == BasisOrder::constant) {
    for (int L = 0; L <= d; ++L) {
      CompactionPoint p;
      p.level = L;
      if (L == d) {
        p.coefficients = static_cast<long long>(cloud.size());
        p.y_psnr = kPsnrCap;
      } else {
        const auto& blocks = octree.binary_level(3 * L);
        Eigen::MatrixXd recon(values.rows(), values.cols());
        for (size_t b = 0; b < blocks.size(); ++b) {
          Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(values.cols());
          for (uint32_t i = blocks[b].begin; i < blocks[b].end; ++i) mean += values.row(i);
          mean /= static_cast<double>(blocks[b].weight());
          for (uint32_t i = blocks[b].begin; i < blocks[b].end; ++i) recon.row(i) = mean;
        }
        p.coefficients = static_cast<long long>(blocks.size());
        p.y_psnr = psnr_y(values, recon);
      }
      out.push_back(p);
    }
    return out;
  }

  const MultiresLevels multires = build_multires(cloud, octree, BasisOrder::trilinear);
  std::vector<GramSystem> grams(d + 1);
  grams[d] = gram_at_finest(multires, values);
  for (int l = d - 1; l >= 0; --l) grams[l] = gram_recursion(multires, grams[l + 1]);
  for (int L = 0; L <= d; ++L) {
    CompactionPoint p;
    p.level = L;
    if (L == d) {
      p.coefficients = static_cast<long long>(cloud.size());
      p.y_psnr = kPsnrCap;
    } else {
      const Projection proj = project(grams[L]);
      const SpMat E = eval_matrix_p2(cloud, octree, L);
      const Eigen::MatrixXd recon = E * proj.coeffs;
      p.coefficients = static_cast<long long>(proj.retained.size());
      p.y_psnr = psnr_y(values, recon);
    }
    out.push_back(p);
  }
  return out;
}

struct RdPoint {
  std::string method;
  std::string params;
  double bits_per_voxel = 0.0;
  double d1_psnr = 0.0;
  std::string error;  // empty on success
};

struct RdConfig {
  std::string method;  // fixed | zero | dist | rd
  double value = 0.0;
  int start_level = 2;
  double stepsize = 1.0;
  ReconstructMethod reconstruct = ReconstructMethod::subdivision;
  double raycast_range = 0.0;
};

inline PrunedOctree run_pruner(const OctreeLevels& octree, const PruneContext& ctx,
                               const std::string& method, double value) {
  if (method == "fixed") return prune_fixed(octree, static_cast<int>(value));
  if (method == "zero") return prune_zero_wavelets(ctx, static_cast<int64_t>(value));
  if (method == "dist") return prune_distortion(ctx, value);
  if (method == "rd") return prune_rd(ctx, value);
  throw std::runtime_error("unknown pruning method: " + method);
}

// One encode/decode/measure cycle per grid point.
inline std::vector<RdPoint> rd_sweep(const VoxelCloud& input, const std::vector<RdConfig>& grid) {
  VoxelCloud cloud = input;
  ensure_normals(cloud);
  const OctreeLevels octree(cloud);
  const SdfField sdf = compute_sdf(cloud, octree);
  std::vector<RdPoint> out;
  for (const auto& cfg : grid) {
    RdPoint point;
    point.method = cfg.method;
    point.params = cfg.method + ":" + std::to_string(cfg.value);
    try {
      const PruneContext ctx = PruneContext::make(cloud, octree, sdf, cfg.start_level,
                                                  cfg.stepsize);
      const PrunedOctree pruned = run_pruner(octree, ctx, cfg.method, cfg.value);
      const GeometryStream stream =
          encode_geometry_stream(octree, sdf, pruned, cfg.start_level, cfg.stepsize);
      const DecodedGeometry decoded = parse_geometry_stream(stream.bytes);
      const VoxelCloud recon =
          reconstruct_geometry(decoded, cfg.reconstruct, cfg.raycast_range);
      point.bits_per_voxel =
          8.0 * static_cast<double>(stream.bytes.size()) / static_cast<double>(cloud.size());
      point.d1_psnr = psnr_d1(cloud, recon);
    } catch (const std::exception& e) {
      point.error = e.what();
    }
    out.push_back(point);
  }
  return out;
}

}  // namespace bvpc
