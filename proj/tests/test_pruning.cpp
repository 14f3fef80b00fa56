#include <catch2/catch_amalgamated.hpp>
#include <functional>
#include <random>

#include "bvpc/geom/normals.hpp"
#include "bvpc/geom/pruning.hpp"
#include "bvpc/io/synth.hpp"
#include "test_support.hpp"

using namespace bvpc;

namespace {

int leaf_count(const PrunedOctree& p) {
  int n = 0;
  for (const auto& level : p.leaf)
    for (uint8_t v : level) n += v;
  return n;
}

PruneContext make_ctx(const VoxelCloud& c, const OctreeLevels& tree, const SdfField& sdf,
                      int l0 = 1, double step = 1.0) {
  return PruneContext::make(c, tree, sdf, l0, step);
}

}  // namespace

TEST_CASE("fixed-level pruning") {
  std::mt19937 rng(3);
  const VoxelCloud c = bvpc_test::random_cloud(rng, 80, 3, 0, true);
  const OctreeLevels tree(c);
  SECTION("voxel level means no pruning") {
    const PrunedOctree p = prune_fixed(tree, c.depth);
    REQUIRE(leaf_count(p) == static_cast<int>(c.size()));
  }
  SECTION("level zero gives the single root volume") {
    const PrunedOctree p = prune_fixed(tree, 0);
    REQUIRE(leaf_count(p) == 1);
    REQUIRE(p.leaf[0][0] == 1);
  }
  SECTION("leaf count equals the level census") {
    for (int L = 0; L <= c.depth; ++L) {
      const PrunedOctree p = prune_fixed(tree, L);
      REQUIRE(leaf_count(p) == static_cast<int>(tree.cubic_level(L).size()));
      // every surviving block is an ancestor-or-self of a leaf
      for (int l = 0; l <= c.depth; ++l)
        for (size_t b = 0; b < p.survive[l].size(); ++b)
          if (p.survive[l][b]) REQUIRE(l <= L);
    }
  }
}

TEST_CASE("zero-wavelet pruning") {
  std::mt19937 rng(5);
  SECTION("maximal cut matches a brute-force descendant scan") {
    for (int trial = 0; trial < 10; ++trial) {
      const VoxelCloud c = bvpc_test::random_cloud(rng, 60, 3, 0, true);
      const OctreeLevels tree(c);
      const SdfField sdf = compute_sdf(c, tree);
      const PruneContext ctx = make_ctx(c, tree, sdf);
      const int64_t t = static_cast<int64_t>(rng() % 2);
      const PrunedOctree p = prune_zero_wavelets(ctx, t);

      // oracle: recompute prunability by exhaustive descendant walking
      std::function<bool(int, int)> all_small = [&](int l, int b) -> bool {
        if (l == c.depth) return true;
        for (int32_t ch : tree.cubic_children(l, b)) {
          const auto& bc = ctx.full_tree.corners[l + 1].block_corners[ch];
          for (int k = 0; k < 8; ++k)
            if (ctx.full_field.born[l + 1][bc[k]] &&
                std::llabs(ctx.full_field.q[l + 1][bc[k]]) > t)
              return false;
          if (!all_small(l + 1, ch)) return false;
        }
        return true;
      };
      std::function<void(int, int)> check = [&](int l, int b) {
        if (p.leaf[l][b]) {
          REQUIRE((l == c.depth || (l >= ctx.start_level && all_small(l, b))));
          // maximality: the parent must not be prunable
          return;
        }
        REQUIRE((l < ctx.start_level || !all_small(l, b) || l == c.depth));
        for (int32_t ch : tree.cubic_children(l, b)) check(l + 1, ch);
      };
      check(0, 0);
    }
  }
  SECTION("strict variant with noisy residuals keeps voxel leaves") {
    const VoxelCloud c = bvpc_test::random_cloud(rng, 200, 3, 0, true);
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    const PruneContext ctx = make_ctx(c, tree, sdf, 1, 0.001);  // tiny step: nothing rounds to 0
    const PrunedOctree p = prune_zero_wavelets(ctx, 0);
    for (int l = 0; l < c.depth; ++l)
      for (size_t b = 0; b < p.leaf[l].size(); ++b) {
        if (!p.leaf[l][b]) continue;
        // any above-voxel leaf must genuinely have all-zero descendants
        std::function<bool(int, int)> all_zero = [&](int lv, int blk) -> bool {
          if (lv == c.depth) return true;
          for (int32_t ch : tree.cubic_children(lv, blk)) {
            const auto& bc = ctx.full_tree.corners[lv + 1].block_corners[ch];
            for (int k = 0; k < 8; ++k)
              if (ctx.full_field.born[lv + 1][bc[k]] && ctx.full_field.q[lv + 1][bc[k]] != 0)
                return false;
            if (!all_zero(lv + 1, ch)) return false;
          }
          return true;
        };
        REQUIRE(all_zero(l, static_cast<int>(b)));
      }
  }
  SECTION("planar surface prunes deep") {
    const VoxelCloud c = synth_cloud(SynthShape::plane, 5, SynthField::smooth_gradient);
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    const PruneContext ctx = make_ctx(c, tree, sdf, 1, 1.0);
    const PrunedOctree p = prune_zero_wavelets(ctx, 0);
    int above_voxel_leaves = 0;
    for (int l = 0; l < c.depth; ++l) above_voxel_leaves += std::count(
        p.leaf[l].begin(), p.leaf[l].end(), uint8_t{1});
    CHECK(above_voxel_leaves > 0);
  }
}

TEST_CASE("distortion pruning") {
  std::mt19937 rng(7);
  const VoxelCloud c = bvpc_test::random_cloud(rng, 80, 3, 0, true);
  const OctreeLevels tree(c);
  const SdfField sdf = compute_sdf(c, tree);
  const PruneContext ctx = make_ctx(c, tree, sdf);
  SECTION("threshold zero prunes only exact reconstructions") {
    const PrunedOctree p = prune_distortion(ctx, 0.0);
    for (int l = 0; l < c.depth; ++l)
      for (size_t b = 0; b < p.leaf[l].size(); ++b)
        if (p.leaf[l][b]) REQUIRE(ctx.block_distortion(l, static_cast<int>(b)) == 0.0);
  }
  SECTION("leaf count grows monotonically as the threshold tightens") {
    int prev = -1;
    for (double e : {1e9, 500.0, 50.0, 5.0, 0.0}) {
      const int leaves = leaf_count(prune_distortion(ctx, e));
      if (prev >= 0) REQUIRE(leaves >= prev);
      prev = leaves;
    }
  }
  SECTION("every leaf above the minimum level satisfies the threshold") {
    const double e = 25.0;
    const PrunedOctree p = prune_distortion(ctx, e);
    for (int l = ctx.start_level; l < c.depth; ++l)
      for (size_t b = 0; b < p.leaf[l].size(); ++b)
        if (p.leaf[l][b]) REQUIRE(ctx.block_distortion(l, static_cast<int>(b)) <= e);
  }
}

TEST_CASE("rate-distortion pruning") {
  std::mt19937 rng(11);
  SECTION("lambda zero keeps everything except exact subtrees") {
    const VoxelCloud c = bvpc_test::random_cloud(rng, 60, 3, 0, true);
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    const PruneContext ctx = make_ctx(c, tree, sdf);
    const PrunedOctree p = prune_rd(ctx, 0.0);
    for (int l = ctx.start_level; l < c.depth; ++l)
      for (size_t b = 0; b < p.leaf[l].size(); ++b)
        if (p.leaf[l][b] && p.survive[l][b])
          REQUIRE(ctx.block_distortion(l, static_cast<int>(b)) == 0.0);
  }
  SECTION("huge lambda collapses to the minimum leaf level") {
    const VoxelCloud c = bvpc_test::random_cloud(rng, 60, 3, 0, true);
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    const PruneContext ctx = PruneContext::make(c, tree, sdf, 0, 1.0);
    const PrunedOctree p = prune_rd(ctx, 1e18);
    REQUIRE(leaf_count(p) == 1);
    REQUIRE(p.leaf[0][0] == 1);
  }
  SECTION("dynamic program matches exhaustive search on a two-level tree") {
    for (int trial = 0; trial < 10; ++trial) {
      const VoxelCloud c = bvpc_test::random_cloud(rng, 30, 2, 0, true);  // depth 2
      const OctreeLevels tree(c);
      const SdfField sdf = compute_sdf(c, tree);
      const PruneContext ctx = PruneContext::make(c, tree, sdf, 0, 1.0);
      const double lambda = 0.5 + (rng() % 100);

      // exhaustive: enumerate all prunings (each level-1 block leaf or
      // expanded; the root leaf or expanded)
      const auto& l1 = tree.cubic_level(1);
      const int n1 = static_cast<int>(l1.size());
      double best_cost = std::numeric_limits<double>::infinity();
      uint32_t best_mask = 0;
      bool best_root_leaf = false;
      auto child_rate = [&](int level, int block) { return ctx.born_bits(level, block); };
      for (int root_leaf = 0; root_leaf <= 1; ++root_leaf) {
        if (root_leaf) {
          const double cost = ctx.block_distortion(0, 0) + lambda;
          if (cost < best_cost) {
            best_cost = cost;
            best_root_leaf = true;
          }
          continue;
        }
        for (uint32_t mask = 0; mask < (1u << n1); ++mask) {
          double cost = lambda * 9.0;  // root occupancy + flag
          for (int b = 0; b < n1; ++b) {
            cost += lambda * child_rate(1, b);
            if (mask & (1u << b)) {
              cost += ctx.block_distortion(1, b) + lambda;
            } else {
              cost += lambda * 9.0;
              for (int32_t ch : tree.cubic_children(1, b)) {
                cost += lambda * child_rate(2, ch);
                cost += lambda;  // voxel leaf flag
              }
            }
          }
          if (cost < best_cost) {
            best_cost = cost;
            best_mask = mask;
            best_root_leaf = false;
          }
        }
      }
      const PrunedOctree p = prune_rd(ctx, lambda);
      if (best_root_leaf) {
        REQUIRE(p.leaf[0][0] == 1);
      } else {
        REQUIRE(p.leaf[0][0] == 0);
        for (int b = 0; b < n1; ++b)
          REQUIRE(static_cast<bool>(p.leaf[1][b]) == static_cast<bool>(best_mask & (1u << b)));
      }
    }
  }
}

TEST_CASE("pruned trees keep structural invariants") {
  std::mt19937 rng(13);
  const VoxelCloud c = bvpc_test::random_cloud(rng, 100, 3, 0, true);
  const OctreeLevels tree(c);
  const SdfField sdf = compute_sdf(c, tree);
  const PruneContext ctx = make_ctx(c, tree, sdf);
  for (const PrunedOctree& p :
       {prune_fixed(tree, 2), prune_zero_wavelets(ctx, 0), prune_distortion(ctx, 10.0),
        prune_rd(ctx, 4.0)}) {
    REQUIRE(p.survive[0][0] == 1);
    for (int l = 0; l < c.depth; ++l) {
      const auto& blocks = tree.cubic_level(l);
      for (size_t b = 0; b < blocks.size(); ++b) {
        const bool expand = p.survive[l][b] && !p.leaf[l][b];
        for (int32_t ch : tree.cubic_children(l, static_cast<int>(b)))
          REQUIRE(static_cast<bool>(p.survive[l + 1][ch]) == expand);
      }
    }
    // every surviving voxel-level block is a leaf
    for (size_t b = 0; b < p.survive[c.depth].size(); ++b)
      if (p.survive[c.depth][b]) REQUIRE(p.leaf[c.depth][b] == 1);
  }
}
