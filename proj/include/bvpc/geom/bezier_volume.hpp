#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bvpc/core/voxel_cloud.hpp"

namespace bvpc {

// Tri-linear interpolation of eight corner values indexed (i<<2)|(j<<1)|k at
// local coordinates t in [0,1]^3.
inline double trilerp(const std::array<double, 8>& f, double tx, double ty, double tz) {
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const double wx = (c & 4) ? tx : 1.0 - tx;
    const double wy = (c & 2) ? ty : 1.0 - ty;
    const double wz = (c & 1) ? tz : 1.0 - tz;
    acc += f[c] * wx * wy * wz;
  }
  return acc;
}

// An octree leaf block whose interior field is fully determined by
// tri-linear interpolation of its eight corner control points.
struct BezierVolume {
  Vec3u origin{0, 0, 0};  // voxel units
  uint32_t side = 1;      // 2^(d - level)
  std::array<double, 8> f{};  // corner controls, index (i<<2)|(j<<1)|k
};

inline bool has_c_crossing(const BezierVolume& bv, double c) {
  const double lo = *std::min_element(bv.f.begin(), bv.f.end());
  const double hi = *std::max_element(bv.f.begin(), bv.f.end());
  return lo <= c && c <= hi;
}

namespace bv_detail {

inline void subdivide_rec(const BezierVolume& bv, double c, std::vector<Vec3u>& out) {
  if (!has_c_crossing(bv, c)) return;
  if (bv.side == 1) {
    out.push_back(bv.origin);
    return;
  }
  // 3x3x3 refined lattice by tri-linear interpolation of the parent corners
  double g[3][3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int e = 0; e < 3; ++e) g[a][b][e] = trilerp(bv.f, a * 0.5, b * 0.5, e * 0.5);
  const uint32_t h = bv.side / 2;
  for (int child = 0; child < 8; ++child) {
    const int ci = (child >> 2) & 1, cj = (child >> 1) & 1, ck = child & 1;
    BezierVolume sub;
    sub.origin = {bv.origin[0] + ci * h, bv.origin[1] + cj * h, bv.origin[2] + ck * h};
    sub.side = h;
    for (int c8 = 0; c8 < 8; ++c8)
      sub.f[c8] = g[ci + ((c8 >> 2) & 1)][cj + ((c8 >> 1) & 1)][ck + (c8 & 1)];
    subdivide_rec(sub, c, out);
  }
}

}  // namespace bv_detail

// Recursive subdivision down to the voxel level: every voxel whose cell
// corners straddle c is emitted, in Morton order within the block.
inline std::vector<Vec3u> subdivide(const BezierVolume& bv, double c) {
  std::vector<Vec3u> out;
  bv_detail::subdivide_rec(bv, c, out);
  return out;
}

// Constant gradient components of the tri-linear field.
struct BvGradient {
  double g[3];
  int dominant;   // argmax of |g|, ties x before y before z
  bool degenerate;  // all components zero
};

inline BvGradient dominant_axis(const BezierVolume& bv) {
  BvGradient out{};
  for (int axis = 0; axis < 3; ++axis) {
    const int bit = 4 >> axis;
    double s = 0.0;
    for (int c = 0; c < 8; ++c)
      if (c & bit) s += bv.f[c] - bv.f[c ^ bit];
    out.g[axis] = s;
  }
  out.dominant = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(out.g[a]) > std::abs(out.g[out.dominant])) out.dominant = a;
  out.degenerate = out.g[0] == 0.0 && out.g[1] == 0.0 && out.g[2] == 0.0;
  return out;
}

// Raster scan down the dominant axis: one ray per voxel column, surface
// intersection by the ratio of the entry/exit face interpolants. range_ext
// admits hits slightly outside the block, in units of the block side.
inline std::vector<Vec3u> raycast(const BezierVolume& bv, double c, double range_ext,
                                  uint32_t grid_side) {
  const BvGradient grad = dominant_axis(bv);
  if (grad.degenerate) return subdivide(bv, c);
  const int axis = grad.dominant;
  // permute so that `axis` becomes the local z
  const int pu = (axis == 0) ? 1 : 0;
  const int pv = (axis == 2) ? 1 : 2;
  auto corner = [&](int u, int v, int w) {
    int idx[3];
    idx[pu] = u;
    idx[pv] = v;
    idx[axis] = w;
    return bv.f[(idx[0] << 2) | (idx[1] << 1) | idx[2]];
  };
  std::vector<Vec3u> out;
  const uint32_t W = bv.side;
  for (uint32_t iu = 0; iu < W; ++iu)
    for (uint32_t iv = 0; iv < W; ++iv) {
      const double u = (iu + 0.5) / W;
      const double v = (iv + 0.5) / W;
      auto bilerp = [&](int w) {
        return corner(0, 0, w) * (1 - u) * (1 - v) + corner(1, 0, w) * u * (1 - v) +
               corner(0, 1, w) * (1 - u) * v + corner(1, 1, w) * u * v;
      };
      const double f0 = bilerp(0);
      const double f1 = bilerp(1);
      const double denom = f0 - f1;
      if (denom == 0.0) continue;  // ray parallel to the level set
      const double w = (f0 - c) / denom;
      if (w < -range_ext || w > 1.0 + range_ext) continue;
      double p[3];
      p[pu] = bv.origin[pu] + u * W;
      p[pv] = bv.origin[pv] + v * W;
      p[axis] = bv.origin[axis] + w * W;
      int64_t vx[3];
      bool ok = true;
      for (int a = 0; a < 3; ++a) {
        vx[a] = static_cast<int64_t>(std::floor(p[a]));
        if (vx[a] < 0 || vx[a] >= static_cast<int64_t>(grid_side)) ok = false;
      }
      if (ok)
        out.push_back({static_cast<uint32_t>(vx[0]), static_cast<uint32_t>(vx[1]),
                       static_cast<uint32_t>(vx[2])});
    }
  return out;
}

}  // namespace bvpc
