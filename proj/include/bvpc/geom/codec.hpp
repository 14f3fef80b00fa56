#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "bvpc/coding/bitio.hpp"
#include "bvpc/coding/container.hpp"
#include "bvpc/coding/quantizer.hpp"
#include "bvpc/coding/rans.hpp"
#include "bvpc/core/octree.hpp"
#include "bvpc/geom/bezier_volume.hpp"
#include "bvpc/geom/sdf.hpp"

namespace bvpc {

// Per-block pruning decision over the cubic octree. Leaves are the blocks
// flagged 1; a block survives iff every ancestor is a surviving internal
// block.
struct PrunedOctree {
  std::vector<std::vector<uint8_t>> leaf;     // [cubic level][block]
  std::vector<std::vector<uint8_t>> survive;  // [cubic level][block]

  static PrunedOctree from_leaf_flags(const OctreeLevels& octree,
                                      std::vector<std::vector<uint8_t>> leaf_flags) {
    PrunedOctree p;
    const int d = octree.depth();
    p.leaf = std::move(leaf_flags);
    p.survive.resize(d + 1);
    for (int l = 0; l <= d; ++l) p.survive[l].assign(octree.cubic_level(l).size(), 0);
    p.survive[0][0] = 1;
    for (int l = 0; l < d; ++l) {
      const auto& blocks = octree.cubic_level(l);
      for (size_t b = 0; b < blocks.size(); ++b) {
        if (!p.survive[l][b] || p.leaf[l][b]) continue;
        for (int32_t c : octree.cubic_children(l, static_cast<int>(b))) p.survive[l + 1][c] = 1;
      }
    }
    // leaf flags of dead blocks are meaningless; clear them
    for (int l = 0; l <= d; ++l)
      for (size_t b = 0; b < p.leaf[l].size(); ++b)
        if (!p.survive[l][b]) p.leaf[l][b] = 0;
    return p;
  }
};

// Minimal tree view shared by the encoder and the decoder: surviving blocks
// per cubic level with Morton order preserved, plus their unique corners.
struct CodecTree {
  struct Block {
    Vec3u origin;
    uint8_t leaf = 0;
    int32_t first_child = -1;  // contiguous children in the next level
    int32_t child_count = 0;
    int32_t source = -1;  // index into OctreeLevels::cubic_level, encoder only
  };
  int depth = 0;
  std::vector<std::vector<Block>> levels;
  std::vector<CornerSet> corners;

  uint32_t side(int l) const { return 1u << (depth - l); }

  static CodecTree from_octree(const OctreeLevels& octree, const PrunedOctree& pruned) {
    CodecTree t;
    t.depth = octree.depth();
    t.levels.resize(t.depth + 1);
    std::vector<std::vector<int32_t>> remap(t.depth + 1);
    for (int l = 0; l <= t.depth; ++l) {
      const auto& blocks = octree.cubic_level(l);
      remap[l].assign(blocks.size(), -1);
      for (size_t b = 0; b < blocks.size(); ++b) {
        if (!pruned.survive[l][b]) continue;
        remap[l][b] = static_cast<int32_t>(t.levels[l].size());
        Block blk;
        blk.origin = octree.block_origin(3 * l, blocks[b]);
        blk.leaf = pruned.leaf[l][b];
        blk.source = static_cast<int32_t>(b);
        t.levels[l].push_back(blk);
      }
    }
    for (int l = 0; l < t.depth; ++l) {
      const auto& blocks = octree.cubic_level(l);
      for (size_t b = 0; b < blocks.size(); ++b) {
        const int32_t self = remap[l][b];
        if (self < 0 || t.levels[l][self].leaf) continue;
        auto& blk = t.levels[l][self];
        for (int32_t c : octree.cubic_children(l, static_cast<int>(b))) {
          const int32_t cc = remap[l + 1][c];
          if (blk.first_child < 0) blk.first_child = cc;
          ++blk.child_count;
        }
      }
    }
    t.build_corners();
    return t;
  }

  void build_corners() {
    corners.resize(depth + 1);
    for (int l = 0; l <= depth; ++l) {
      std::vector<Vec3u> origins(levels[l].size());
      for (size_t b = 0; b < levels[l].size(); ++b) origins[b] = levels[l][b].origin;
      const uint32_t s = side(l);
      corners[l] = make_corner_set(origins, {s, s, s}, depth);
    }
  }
};

// Reconstructed control points and residuals of one in-loop coding pass.
// A corner is "born" at the first level where it appears, i.e. where at
// least one of its lattice coordinates is odd; corners inherited from the
// parent lattice carry their reconstructed value down unchanged.
struct InLoopField {
  int start_level = 0;
  std::vector<std::vector<double>> fhat;    // [level][corner]
  std::vector<std::vector<double>> pred;    // prediction (born corners only)
  std::vector<std::vector<int64_t>> q;      // quantized residual (born corners)
  std::vector<std::vector<uint8_t>> born;
};

inline bool corner_is_born(const Vec3u& pos, uint32_t level_side) {
  for (int a = 0; a < 3; ++a)
    if ((pos[a] / level_side) & 1u) return true;
  return false;
}

// Shared in-loop pass. With `original` present (encoder) the residuals are
// computed and quantized; with `symbols` present (decoder) they are consumed.
// Prediction order is fixed: blocks in Morton order assign predictions to
// their children's corners, first writer wins.
inline InLoopField inloop_pass(const CodecTree& tree, int l0, double stepsize,
                               const SdfField* original,
                               const std::vector<std::vector<int64_t>>* symbols,
                               bool residuals_at_voxel_level,
                               const OctreeLevels* octree_for_sdf = nullptr) {
  const int d = tree.depth;
  const QuantizerSpec spec{stepsize, 0};
  InLoopField field;
  field.start_level = l0;
  field.fhat.resize(d + 1);
  field.pred.resize(d + 1);
  field.q.resize(d + 1);
  field.born.resize(d + 1);

  // original SDF values looked up via the full octree's corner ids
  auto original_value = [&](int l, const Vec3u& pos) -> double {
    const auto& cs = octree_for_sdf->corners(l);
    const int32_t id = cs.find(pos[0], pos[1], pos[2]);
    if (id < 0) throw std::runtime_error("inloop: corner missing from source octree");
    return original->values[l][id];
  };

  // start level: all corners coded directly
  {
    const auto& cs = tree.corners[l0];
    auto& fh = field.fhat[l0];
    auto& qs = field.q[l0];
    fh.resize(cs.size());
    qs.resize(cs.size());
    field.born[l0].assign(cs.size(), 1);
    field.pred[l0].assign(cs.size(), 0.0);
    for (size_t c = 0; c < cs.size(); ++c) {
      int64_t qv;
      if (original) {
        qv = quantize(original_value(l0, cs.coords[c]), spec);
      } else {
        qv = (*symbols)[l0][c];
      }
      qs[c] = qv;
      fh[c] = dequantize(qv, spec);
    }
  }

  for (int l = l0; l < d; ++l) {
    const int lc = l + 1;
    if (lc == d && !residuals_at_voxel_level && !original) {
      // decoder never needs voxel-level control points
      break;
    }
    const auto& cs = tree.corners[lc];
    const auto& parent_cs = tree.corners[l];
    const uint32_t child_side = tree.side(lc);
    auto& fh = field.fhat[lc];
    auto& pr = field.pred[lc];
    auto& qs = field.q[lc];
    auto& bo = field.born[lc];
    fh.assign(cs.size(), std::numeric_limits<double>::quiet_NaN());
    pr.assign(cs.size(), std::numeric_limits<double>::quiet_NaN());
    qs.assign(cs.size(), 0);
    bo.assign(cs.size(), 0);

    // assign predictions from parent blocks in Morton order
    for (size_t b = 0; b < tree.levels[l].size(); ++b) {
      const auto& blk = tree.levels[l][b];
      if (blk.leaf || blk.child_count == 0) continue;
      std::array<double, 8> pf;
      for (int c8 = 0; c8 < 8; ++c8)
        pf[c8] = field.fhat[l][parent_cs.block_corners[b][c8]];
      for (int32_t ci = 0; ci < blk.child_count; ++ci) {
        const int32_t cb = blk.first_child + ci;
        for (int c8 = 0; c8 < 8; ++c8) {
          const int32_t id = tree.corners[lc].block_corners[cb][c8];
          if (!std::isnan(pr[id]) || !std::isnan(fh[id])) continue;
          const auto& pos = cs.coords[id];
          if (!corner_is_born(pos, child_side)) {
            // inherited: exact copy of the parent-level value
            const int32_t pid = parent_cs.find(pos[0], pos[1], pos[2]);
            if (pid < 0) throw std::runtime_error("inloop: inherited corner missing");
            fh[id] = field.fhat[l][pid];
          } else {
            const auto& po = blk.origin;
            const double inv = 1.0 / tree.side(l);
            pr[id] = trilerp(pf, (pos[0] - po[0]) * inv, (pos[1] - po[1]) * inv,
                             (pos[2] - po[2]) * inv);
          }
        }
      }
    }

    const bool emit_level = lc <= d - 1 || residuals_at_voxel_level;
    size_t sym_pos = 0;
    for (size_t c = 0; c < cs.size(); ++c) {
      if (!std::isnan(fh[c])) continue;  // inherited
      if (std::isnan(pr[c])) throw std::runtime_error("inloop: corner without prediction");
      bo[c] = 1;
      int64_t qv = 0;
      if (emit_level) {
        if (original)
          qv = quantize(original_value(lc, cs.coords[c]) - pr[c], spec);
        else
          qv = (*symbols)[lc][sym_pos++];
      }
      qs[c] = qv;
      fh[c] = pr[c] + dequantize(qv, spec);
    }
  }
  return field;
}

// Quantized residual symbols of the born corners, in corner order, of one
// level of an in-loop field.
inline std::vector<int64_t> born_symbols(const InLoopField& field, int level) {
  std::vector<int64_t> out;
  if (level >= static_cast<int>(field.born.size())) return out;
  for (size_t c = 0; c < field.born[level].size(); ++c)
    if (field.born[level][c]) out.push_back(field.q[level][c]);
  return out;
}

struct GeometryStream {
  std::vector<uint8_t> bytes;
  // bit accounting, header plus one entry per section
  std::vector<std::pair<std::string, uint64_t>> section_bits;
};

inline GeometryStream encode_geometry_stream(const OctreeLevels& octree, const SdfField& sdf,
                                             const PrunedOctree& pruned, int l0,
                                             double stepsize,
                                             ByteCodec codec = ByteCodec::deflate) {
  const int d = octree.depth();
  if (l0 < 0 || l0 > d) throw std::runtime_error("encode_geometry: start level out of range");
  for (int l = 0; l < l0; ++l)
    for (size_t b = 0; b < pruned.leaf[l].size(); ++b)
      if (pruned.leaf[l][b])
        throw std::runtime_error("encode_geometry: leaf above the start level");

  const CodecTree tree = CodecTree::from_octree(octree, pruned);
  const InLoopField field = inloop_pass(tree, l0, stepsize, &sdf, nullptr, false, &octree);

  Container c;
  c.magic = {'B', 'V', 'P', 'C'};
  c.depth = static_cast<uint8_t>(d);
  c.start_level = static_cast<uint8_t>(l0);
  c.stepsize = stepsize;
  c.codec = codec;

  // section 0: occupancy codes of internal blocks, level-major Morton order
  {
    ByteWriter w;
    for (int l = 0; l < d; ++l)
      for (size_t b = 0; b < tree.levels[l].size(); ++b) {
        const auto& blk = tree.levels[l][b];
        if (blk.leaf) continue;
        uint8_t mask = 0;
        for (int32_t ci = 0; ci < blk.child_count; ++ci) {
          const auto& child = tree.levels[l + 1][blk.first_child + ci];
          int local = 0;
          for (int a = 0; a < 3; ++a)
            if (child.origin[a] != blk.origin[a]) local |= 4 >> a;
          mask |= static_cast<uint8_t>(1u << (7 - local));
        }
        w.u8(mask);
      }
    c.sections[0] = std::move(w.bytes);
  }

  // section 1: post-pruning leaf flags, one bit per surviving block
  {
    BitWriter bw;
    for (int l = 0; l <= d; ++l)
      for (const auto& blk : tree.levels[l]) bw.put_bit(blk.leaf);
    c.sections[1] = bw.take();
  }

  // section 2: quantized start-level control points
  {
    ByteWriter w;
    for (size_t i = 0; i < field.q[l0].size(); ++i) {
      const int64_t qv = field.q[l0][i];
      if (qv < INT32_MIN || qv > INT32_MAX)
        throw std::runtime_error("encode_geometry: start control out of 32-bit range");
      w.i32(static_cast<int32_t>(qv));
    }
    c.sections[2] = std::move(w.bytes);
  }

  // sections 3 and 4: per-level rANS wavelet payloads and their escapes
  {
    ByteWriter w3, w4;
    for (int l = l0 + 1; l <= d - 1; ++l) {
      const std::vector<int64_t> syms = born_symbols(field, l);
      w3.u32(static_cast<uint32_t>(syms.size()));
      w4.u32(0);  // escape count placeholder patched below
      const size_t esc_count_pos = w4.bytes.size() - 4;
      if (!syms.empty()) {
        const RansModel model = RansModel::from_symbols(syms);
        model.serialize(w3.bytes);
        const RansPayload payload = rans_encode(syms, model);
        w3.u32(static_cast<uint32_t>(payload.bytes.size()));
        w3.raw(payload.bytes);
        w3.u32(payload_crc32(payload.bytes));
        for (size_t e = 0; e < payload.escapes.size(); ++e) w4.i64(payload.escapes[e]);
        const uint32_t n_esc = static_cast<uint32_t>(payload.escapes.size());
        for (int b = 0; b < 4; ++b)
          w4.bytes[esc_count_pos + b] = static_cast<uint8_t>((n_esc >> (8 * b)) & 0xff);
      }
    }
    c.sections[3] = std::move(w3.bytes);
    c.sections[4] = std::move(w4.bytes);
  }

  GeometryStream out;
  out.bytes = c.assemble();
  uint64_t payload_bytes = 0;
  for (uint32_t s : c.packed_sizes) payload_bytes += s;
  out.section_bits.emplace_back("header", (out.bytes.size() - payload_bytes) * 8);
  const char* names[kNumSections] = {"occupancy", "leaf_flags", "start_controls", "wavelets",
                                     "escapes"};
  for (int s = 0; s < kNumSections; ++s)
    out.section_bits.emplace_back(names[s], static_cast<uint64_t>(c.packed_sizes[s]) * 8);
  return out;
}

// Decoded form of a geometry stream: the pruned tree, reconstructed control
// points at every surviving corner, and the codec parameters.
struct DecodedGeometry {
  int depth = 0;
  int start_level = 0;
  double stepsize = 1.0;
  CodecTree tree;
  InLoopField field;
};

inline DecodedGeometry parse_geometry_stream(const std::vector<uint8_t>& bytes) {
  const Container c = Container::parse(bytes, "BVPC");
  DecodedGeometry g;
  g.depth = c.depth;
  g.start_level = c.start_level;
  g.stepsize = c.stepsize;
  const int d = g.depth;
  const int l0 = g.start_level;

  // rebuild the pruned tree from leaf flags and occupancy codes
  CodecTree& tree = g.tree;
  tree.depth = d;
  tree.levels.resize(d + 1);
  tree.levels[0].push_back({{0, 0, 0}, 0, -1, 0, -1});
  BitReader flags(c.sections[1]);
  ByteReader occ(c.sections[0]);
  for (int l = 0; l <= d; ++l) {
    const uint32_t h = tree.side(l) / 2;  // child side
    for (size_t b = 0; b < tree.levels[l].size(); ++b) {
      auto& blk = tree.levels[l][b];
      blk.leaf = static_cast<uint8_t>(flags.get_bit());
      if (l == d && !blk.leaf)
        throw std::runtime_error("parse_geometry: voxel-level block must be a leaf");
      if (blk.leaf || l == d) continue;
      const uint8_t mask = occ.u8();
      if (mask == 0) throw std::runtime_error("parse_geometry: empty occupancy code");
      blk.first_child = static_cast<int32_t>(tree.levels[l + 1].size());
      for (int local = 0; local < 8; ++local) {
        if (!(mask & (1u << (7 - local)))) continue;
        CodecTree::Block child;
        child.origin = {blk.origin[0] + ((local >> 2) & 1) * h,
                        blk.origin[1] + ((local >> 1) & 1) * h,
                        blk.origin[2] + (local & 1) * h};
        tree.levels[l + 1].push_back(child);
        ++blk.child_count;
      }
    }
  }
  tree.build_corners();

  // start controls and per-level residual symbols
  std::vector<std::vector<int64_t>> symbols(d + 1);
  {
    ByteReader r(c.sections[2]);
    auto& s = symbols[l0];
    s.resize(tree.corners[l0].size());
    for (auto& v : s) v = r.i32();
  }
  {
    ByteReader r3(c.sections[3]);
    ByteReader r4(c.sections[4]);
    for (int l = l0 + 1; l <= d - 1; ++l) {
      const uint32_t n = r3.u32();
      const uint32_t n_esc = r4.u32();
      if (n == 0) {
        if (n_esc != 0) throw std::runtime_error("parse_geometry: stray escapes");
        continue;
      }
      size_t pos = r3.pos;
      const RansModel model = RansModel::deserialize(r3.data, r3.size, pos);
      r3.pos = pos;
      const uint32_t len = r3.u32();
      const std::vector<uint8_t> payload = r3.raw(len);
      const uint32_t crc = r3.u32();
      if (crc != payload_crc32(payload))
        throw std::runtime_error("parse_geometry: rANS payload checksum failure");
      std::vector<int64_t> escapes(n_esc);
      for (auto& e : escapes) e = r4.i64();
      symbols[l] = rans_decode(payload, escapes, model, n);
    }
  }

  g.field = inloop_pass(tree, l0, g.stepsize, nullptr, &symbols, false, nullptr);
  return g;
}

enum class ReconstructMethod { subdivision, raycast };

// Turn decoded control points into explicit voxels: voxel-level leaves come
// straight from the occupancy codes, coarser leaves from their zero crossing.
inline VoxelCloud reconstruct_geometry(const DecodedGeometry& g,
                                       ReconstructMethod method = ReconstructMethod::subdivision,
                                       double raycast_range = 0.0) {
  std::vector<Vec3u> voxels;
  const uint32_t grid = 1u << g.depth;
  for (int l = 0; l <= g.depth; ++l) {
    for (size_t b = 0; b < g.tree.levels[l].size(); ++b) {
      const auto& blk = g.tree.levels[l][b];
      if (!blk.leaf) continue;
      if (l == g.depth) {
        voxels.push_back(blk.origin);
        continue;
      }
      BezierVolume bv;
      bv.origin = blk.origin;
      bv.side = g.tree.side(l);
      for (int c8 = 0; c8 < 8; ++c8)
        bv.f[c8] = g.field.fhat[l][g.tree.corners[l].block_corners[b][c8]];
      std::vector<Vec3u> part;
      if (method == ReconstructMethod::subdivision) {
        part = subdivide(bv, 0.0);
      } else {
        part = raycast(bv, 0.0, raycast_range, grid);
      }
      voxels.insert(voxels.end(), part.begin(), part.end());
    }
  }
  return make_cloud(g.depth, std::move(voxels));
}

}  // namespace bvpc
