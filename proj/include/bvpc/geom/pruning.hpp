#pragma once

#include <cmath>
#include <unordered_map>

#include "bvpc/geom/codec.hpp"
#include "bvpc/geom/nn.hpp"

namespace bvpc {

inline PrunedOctree unpruned(const OctreeLevels& octree) {
  const int d = octree.depth();
  std::vector<std::vector<uint8_t>> flags(d + 1);
  for (int l = 0; l <= d; ++l) flags[l].assign(octree.cubic_level(l).size(), l == d ? 1 : 0);
  return PrunedOctree::from_leaf_flags(octree, std::move(flags));
}

// All leaves at one chosen level.
inline PrunedOctree prune_fixed(const OctreeLevels& octree, int level) {
  const int d = octree.depth();
  if (level < 0 || level > d) throw std::runtime_error("prune_fixed: level out of range");
  std::vector<std::vector<uint8_t>> flags(d + 1);
  for (int l = 0; l <= d; ++l) flags[l].assign(octree.cubic_level(l).size(), l == level ? 1 : 0);
  return PrunedOctree::from_leaf_flags(octree, std::move(flags));
}

// Shared inputs of the variable-level pruners: the in-loop coded full tree
// (with voxel-level residuals, used only for pruning statistics) and the
// per-level symbol histograms for the rate estimate.
struct PruneContext {
  const VoxelCloud* cloud = nullptr;
  const OctreeLevels* octree = nullptr;
  int start_level = 0;
  double stepsize = 1.0;
  CodecTree full_tree;
  InLoopField full_field;
  std::vector<std::unordered_map<int64_t, double>> symbol_bits;  // [level][q] -> bits
  mutable std::vector<std::vector<double>> distortion_cache;     // [level][block], NaN = unset

  static PruneContext make(const VoxelCloud& cloud, const OctreeLevels& octree,
                           const SdfField& sdf, int start_level, double stepsize) {
    PruneContext ctx;
    ctx.cloud = &cloud;
    ctx.octree = &octree;
    ctx.start_level = start_level;
    ctx.stepsize = stepsize;
    ctx.full_tree = CodecTree::from_octree(octree, unpruned(octree));
    ctx.full_field = inloop_pass(ctx.full_tree, start_level, stepsize, &sdf, nullptr, true, &octree);
    const int d = octree.depth();
    ctx.symbol_bits.resize(d + 1);
    for (int l = start_level + 1; l <= d - 1; ++l) {
      std::unordered_map<int64_t, uint64_t> counts;
      uint64_t total = 0;
      for (size_t c = 0; c < ctx.full_field.born[l].size(); ++c)
        if (ctx.full_field.born[l][c]) {
          ++counts[ctx.full_field.q[l][c]];
          ++total;
        }
      if (total == 0) continue;
      for (const auto& [sym, n] : counts)
        ctx.symbol_bits[l][sym] =
            -std::log2(static_cast<double>(n) / static_cast<double>(total));
    }
    ctx.distortion_cache.resize(d + 1);
    for (int l = 0; l <= d; ++l)
      ctx.distortion_cache[l].assign(octree.cubic_level(l).size(),
                                     std::numeric_limits<double>::quiet_NaN());
    return ctx;
  }

  // entropy bits of the born-corner residuals a block introduces at its level
  double born_bits(int level, int block) const {
    if (level > static_cast<int>(full_field.born.size()) - 1 || level >= octree->depth())
      return 0.0;
    if (level <= start_level) return 0.0;
    double acc = 0.0;
    const auto& bc = full_tree.corners[level].block_corners[block];
    for (int c8 = 0; c8 < 8; ++c8) {
      const int32_t id = bc[c8];
      if (!full_field.born[level][id]) continue;
      auto it = symbol_bits[level].find(full_field.q[level][id]);
      if (it != symbol_bits[level].end()) acc += it->second;
    }
    return acc;
  }

  // max of the two one-way squared-error sums between the block-local
  // reconstruction (recursive subdivision of the candidate leaf) and the
  // original voxels of the block. A leaf without a zero crossing reconstructs
  // nothing inside the block; its points can at best be matched just outside,
  // so each one is charged the squared distance to the block boundary.
  double block_distortion(int level, int block) const {
    if (level == octree->depth()) return 0.0;
    if (!std::isnan(distortion_cache[level][block])) return distortion_cache[level][block];
    distortion_cache[level][block] = block_distortion_uncached(level, block);
    return distortion_cache[level][block];
  }

  double block_distortion_uncached(int level, int block) const {
    const auto& node = octree->cubic_level(level)[block];
    BezierVolume bv;
    bv.origin = octree->block_origin(3 * level, node);
    bv.side = 1u << (octree->depth() - level);
    const auto& bc = full_tree.corners[level].block_corners[block];
    for (int c8 = 0; c8 < 8; ++c8) bv.f[c8] = full_field.fhat[level][bc[c8]];
    const std::vector<Vec3u> recon = subdivide(bv, 0.0);
    std::vector<Vec3u> orig(cloud->positions.begin() + node.begin,
                            cloud->positions.begin() + node.end);
    if (recon.empty()) {
      double acc = 0.0;
      for (const auto& p : orig) {
        int64_t exit = bv.side;
        for (int a = 0; a < 3; ++a) {
          const int64_t lo = static_cast<int64_t>(p[a]) - bv.origin[a] + 1;
          const int64_t hi = bv.origin[a] + bv.side - p[a];
          exit = std::min({exit, lo, hi});
        }
        acc += static_cast<double>(exit * exit);
      }
      return acc;
    }
    return std::max(nn_sum_squared(recon, orig), nn_sum_squared(orig, recon));
  }
};

// Leaf wherever every residual on the corners of all descendant blocks has
// quantized magnitude at most `threshold` (0 is the strict variant), as high
// up the tree as possible but never above the start level.
inline PrunedOctree prune_zero_wavelets(const PruneContext& ctx, int64_t threshold) {
  const OctreeLevels& octree = *ctx.octree;
  const int d = octree.depth();
  std::vector<std::vector<uint8_t>> prunable(d + 1);
  prunable[d].assign(octree.cubic_level(d).size(), 1);
  for (int l = d - 1; l >= 0; --l) {
    const auto& blocks = octree.cubic_level(l);
    prunable[l].assign(blocks.size(), 1);
    for (size_t b = 0; b < blocks.size(); ++b) {
      for (int32_t c : octree.cubic_children(l, static_cast<int>(b))) {
        if (!prunable[l + 1][c]) {
          prunable[l][b] = 0;
          break;
        }
        const auto& bc = ctx.full_tree.corners[l + 1].block_corners[c];
        for (int c8 = 0; c8 < 8 && prunable[l][b]; ++c8) {
          const int32_t id = bc[c8];
          if (ctx.full_field.born[l + 1][id] &&
              std::llabs(ctx.full_field.q[l + 1][id]) > threshold)
            prunable[l][b] = 0;
        }
        if (!prunable[l][b]) break;
      }
    }
  }
  std::vector<std::vector<uint8_t>> flags(d + 1);
  for (int l = 0; l <= d; ++l) flags[l].assign(octree.cubic_level(l).size(), 0);
  // maximal cut: a block is a leaf iff it is prunable and reachable through
  // non-prunable ancestors (or sits at the minimum leaf level)
  struct Walker {
    const OctreeLevels& octree;
    const std::vector<std::vector<uint8_t>>& prunable;
    std::vector<std::vector<uint8_t>>& flags;
    int min_level, d;
    void walk(int l, int b) {
      if ((l >= min_level && prunable[l][b]) || l == d) {
        flags[l][b] = 1;
        return;
      }
      for (int32_t c : octree.cubic_children(l, b)) walk(l + 1, c);
    }
  } walker{octree, prunable, flags, ctx.start_level, d};
  walker.walk(0, 0);
  return PrunedOctree::from_leaf_flags(octree, std::move(flags));
}

// Leaf wherever the estimated geometry reconstruction error is within the
// threshold, as high up the tree as possible.
inline PrunedOctree prune_distortion(const PruneContext& ctx, double error_threshold) {
  const OctreeLevels& octree = *ctx.octree;
  const int d = octree.depth();
  std::vector<std::vector<uint8_t>> flags(d + 1);
  for (int l = 0; l <= d; ++l) flags[l].assign(octree.cubic_level(l).size(), 0);
  struct Walker {
    const PruneContext& ctx;
    std::vector<std::vector<uint8_t>>& flags;
    double threshold;
    int min_level, d;
    void walk(int l, int b) {
      if (l == d) {
        flags[l][b] = 1;
        return;
      }
      if (l >= min_level && ctx.block_distortion(l, b) <= threshold) {
        flags[l][b] = 1;
        return;
      }
      for (int32_t c : ctx.octree->cubic_children(l, b)) walk(l + 1, c);
    }
  } walker{ctx, flags, error_threshold, ctx.start_level, d};
  walker.walk(0, 0);
  return PrunedOctree::from_leaf_flags(octree, std::move(flags));
}

// Bottom-up rate-distortion pruning: a block becomes a leaf iff its leaf cost
// D + lambda*R is no worse than the total cost of keeping its subtree, with
// the rate estimated from per-level residual entropies plus 8 bits of
// occupancy per internal node and 1 flag bit per surviving block.
inline PrunedOctree prune_rd(const PruneContext& ctx, double lambda) {
  const OctreeLevels& octree = *ctx.octree;
  const int d = octree.depth();
  std::vector<std::vector<double>> cost(d + 1);
  std::vector<std::vector<uint8_t>> flags(d + 1);
  for (int l = d; l >= 0; --l) {
    const auto& blocks = octree.cubic_level(l);
    cost[l].assign(blocks.size(), 0.0);
    flags[l].assign(blocks.size(), 0);
    for (size_t b = 0; b < blocks.size(); ++b) {
      if (l == d) {
        cost[l][b] = lambda;  // leaf flag bit, zero distortion
        flags[l][b] = 1;
        continue;
      }
      double internal = lambda * 9.0;  // occupancy byte + own leaf flag
      for (int32_t c : octree.cubic_children(l, static_cast<int>(b)))
        internal += cost[l + 1][c] + lambda * ctx.born_bits(l + 1, c);
      if (l >= ctx.start_level) {
        const double leaf = ctx.block_distortion(l, static_cast<int>(b)) + lambda;
        if (leaf <= internal) {
          cost[l][b] = leaf;
          flags[l][b] = 1;
          continue;
        }
      }
      cost[l][b] = internal;
    }
  }
  return PrunedOctree::from_leaf_flags(octree, std::move(flags));
}

}  // namespace bvpc
