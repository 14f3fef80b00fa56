#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "bvpc/core/voxel_cloud.hpp"

namespace bvpc {

// One occupied block of the hierarchical partition. Binary levels split one
// axis at a time in x, y, z order, so Morton-prefix grouping is grouping by
// block at every level.
struct OctreeNode {
  uint64_t prefix = 0;     // leading `level` bits of the Morton code
  uint32_t begin = 0;      // voxel index range covered by this block
  uint32_t end = 0;
  int32_t parent = -1;     // index into the previous binary level
  int32_t first_child = -1;  // index into the next binary level
  int32_t child_count = 0;

  uint32_t weight() const { return end - begin; }
};

inline uint64_t pack_corner(uint32_t x, uint32_t y, uint32_t z) {
  return (static_cast<uint64_t>(x) << 42) | (static_cast<uint64_t>(y) << 21) |
         static_cast<uint64_t>(z);
}

// Unique corners of the occupied blocks at one (cubic) level, with
// block <-> corner incidence. Corner coordinates are integer lattice shifts
// in voxel units, which makes deduplication of shared corners exact.
struct CornerSet {
  std::vector<Vec3u> coords;                    // sorted by (d+1)-bit Morton code
  std::vector<std::array<int32_t, 8>> block_corners;  // per block: corner ids, index (i<<2)|(j<<1)|k
  std::vector<int32_t> incidence_offsets;       // CSR: corners+1 offsets
  std::vector<int32_t> incidence_blocks;        // CSR: block ids sharing each corner
  std::unordered_map<uint64_t, int32_t> index;  // packed coord -> corner id

  size_t size() const { return coords.size(); }
  int32_t find(uint32_t x, uint32_t y, uint32_t z) const {
    auto it = index.find(pack_corner(x, y, z));
    return it == index.end() ? -1 : it->second;
  }
};

// Unique corners of blocks with the given origins and per-axis size, in
// (d+1)-bit Morton order, with block <-> corner incidence.
inline CornerSet make_corner_set(const std::vector<Vec3u>& origins,
                                 const std::array<uint32_t, 3>& size, int depth) {
  CornerSet cs;
  std::vector<std::pair<uint64_t, uint64_t>> keyed;  // (morton, packed)
  keyed.reserve(origins.size() * 8);
  for (const auto& o : origins)
    for (int c = 0; c < 8; ++c) {
      const uint32_t x = o[0] + ((c >> 2) & 1) * size[0];
      const uint32_t y = o[1] + ((c >> 1) & 1) * size[1];
      const uint32_t z = o[2] + (c & 1) * size[2];
      keyed.emplace_back(morton_encode(x, y, z, depth + 1), pack_corner(x, y, z));
    }
  std::sort(keyed.begin(), keyed.end());
  keyed.erase(std::unique(keyed.begin(), keyed.end()), keyed.end());
  cs.coords.reserve(keyed.size());
  cs.index.reserve(keyed.size() * 2);
  for (const auto& [m, packed] : keyed) {
    (void)m;
    cs.index.emplace(packed, static_cast<int32_t>(cs.coords.size()));
    cs.coords.push_back({static_cast<uint32_t>(packed >> 42),
                         static_cast<uint32_t>((packed >> 21) & 0x1fffff),
                         static_cast<uint32_t>(packed & 0x1fffff)});
  }
  cs.block_corners.resize(origins.size());
  std::vector<int32_t> counts(cs.coords.size() + 1, 0);
  for (size_t b = 0; b < origins.size(); ++b)
    for (int c = 0; c < 8; ++c) {
      const uint32_t x = origins[b][0] + ((c >> 2) & 1) * size[0];
      const uint32_t y = origins[b][1] + ((c >> 1) & 1) * size[1];
      const uint32_t z = origins[b][2] + (c & 1) * size[2];
      const int32_t id = cs.index.at(pack_corner(x, y, z));
      cs.block_corners[b][c] = id;
      ++counts[id + 1];
    }
  cs.incidence_offsets.assign(cs.coords.size() + 1, 0);
  for (size_t i = 1; i < counts.size(); ++i)
    cs.incidence_offsets[i] = cs.incidence_offsets[i - 1] + counts[i];
  cs.incidence_blocks.resize(cs.incidence_offsets.back());
  std::vector<int32_t> cursor(cs.incidence_offsets.begin(), cs.incidence_offsets.end() - 1);
  for (size_t b = 0; b < origins.size(); ++b)
    for (int c = 0; c < 8; ++c) {
      const int32_t id = cs.block_corners[b][c];
      cs.incidence_blocks[cursor[id]++] = static_cast<int32_t>(b);
    }
  return cs;
}

// Sparse voxel octree over a VoxelCloud, exposed as two views of the same
// structure: binary levels 0..3d (one axis split per level, used by the
// order-1 attribute transform) and cubic levels 0..d (every third binary
// level, used by the geometry codec and the order-2 transform).
class OctreeLevels {
 public:
  explicit OctreeLevels(const VoxelCloud& cloud) : depth_(cloud.depth) {
    if (cloud.size() == 0) throw std::runtime_error("OctreeLevels: empty cloud");
    const int levels = 3 * depth_;
    codes_.resize(cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i) codes_[i] = cloud.morton(i);

    binary_.resize(levels + 1);
    for (int l = 0; l <= levels; ++l) {
      const int shift = levels - l;
      auto& nodes = binary_[l];
      uint32_t i = 0;
      const uint32_t n = static_cast<uint32_t>(codes_.size());
      while (i < n) {
        const uint64_t prefix = codes_[i] >> shift;
        uint32_t j = i;
        while (j < n && (codes_[j] >> shift) == prefix) ++j;
        nodes.push_back({prefix, i, j, -1, -1, 0});
        i = j;
      }
    }
    // parent/child links between consecutive binary levels
    for (int l = 0; l < levels; ++l) {
      auto& coarse = binary_[l];
      auto& fine = binary_[l + 1];
      size_t p = 0;
      for (size_t c = 0; c < fine.size(); ++c) {
        while (fine[c].begin >= coarse[p].end) ++p;
        fine[c].parent = static_cast<int32_t>(p);
        if (coarse[p].first_child < 0) coarse[p].first_child = static_cast<int32_t>(c);
        ++coarse[p].child_count;
      }
    }
    cubic_children_.resize(depth_);
    for (int l = 0; l < depth_; ++l) {
      const auto& coarse = binary_[3 * l];
      const auto& fine = binary_[3 * (l + 1)];
      auto& kids = cubic_children_[l];
      kids.assign(coarse.size(), {});
      size_t p = 0;
      for (size_t c = 0; c < fine.size(); ++c) {
        while (fine[c].begin >= coarse[p].end) ++p;
        kids[p].push_back(static_cast<int32_t>(c));
      }
    }
    corners_.resize(depth_ + 1);
    for (int l = 0; l <= depth_; ++l) corners_[l] = build_corners(3 * l);
  }

  int depth() const { return depth_; }
  int binary_levels() const { return 3 * depth_; }

  const std::vector<OctreeNode>& binary_level(int l) const {
    if (l < 0 || l > binary_levels()) throw std::out_of_range("binary level out of range");
    return binary_[l];
  }
  const std::vector<OctreeNode>& cubic_level(int l) const { return binary_level(3 * l); }
  const std::vector<int32_t>& cubic_children(int l, int block) const {
    return cubic_children_[l][block];
  }
  const CornerSet& corners(int cubic_l) const {
    if (cubic_l < 0 || cubic_l > depth_) throw std::out_of_range("cubic level out of range");
    return corners_[cubic_l];
  }

  // Per-axis bit counts consumed after `l` binary splits (x first).
  static std::array<int, 3> axis_bits(int l) {
    return {(l + 2) / 3, (l + 1) / 3, l / 3};
  }

  // Origin of a block in voxel units.
  Vec3u block_origin(int l, const OctreeNode& node) const {
    const auto bits = axis_bits(l);
    const int pad = (3 - l % 3) % 3;
    const auto xyz = morton_decode(node.prefix << pad);
    Vec3u origin;
    for (int a = 0; a < 3; ++a) {
      uint32_t c = xyz[a];
      if (pad > 0 && a >= 3 - pad) c >>= 1;
      origin[a] = c << (depth_ - bits[a]);
    }
    return origin;
  }

  // Block side lengths in voxel units (cuboids at intermediate levels).
  std::array<uint32_t, 3> block_size(int l) const {
    const auto bits = axis_bits(l);
    return {1u << (depth_ - bits[0]), 1u << (depth_ - bits[1]), 1u << (depth_ - bits[2])};
  }

  // Unique corners of the occupied blocks at any binary level; cubic levels
  // are precomputed, other levels are built on demand.
  CornerSet unique_corners(int l) const {
    if (l < 0 || l > binary_levels()) throw std::out_of_range("unique_corners: level out of range");
    if (l % 3 == 0) return corners_[l / 3];
    return build_corners(l);
  }

 private:
  CornerSet build_corners(int l) const {
    const auto& nodes = binary_[l];
    std::vector<Vec3u> origins(nodes.size());
    for (size_t b = 0; b < nodes.size(); ++b) origins[b] = block_origin(l, nodes[b]);
    return make_corner_set(origins, block_size(l), depth_);
  }

  int depth_;
  std::vector<uint64_t> codes_;
  std::vector<std::vector<OctreeNode>> binary_;
  std::vector<std::vector<std::vector<int32_t>>> cubic_children_;
  std::vector<CornerSet> corners_;
};

}  // namespace bvpc
