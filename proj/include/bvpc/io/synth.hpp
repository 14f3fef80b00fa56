#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bvpc/core/voxel_cloud.hpp"

namespace bvpc {

enum class SynthShape { sphere, plane, torus };
enum class SynthField { smooth_gradient, checker };

namespace synth_detail {

// Smooth low-frequency color field over the unit cube.
inline void smooth_color(double x, double y, double z, double* rgb) {
  using std::numbers::pi;
  rgb[0] = 127.5 * (1.0 + std::sin(2.0 * pi * 0.7 * x + 0.3));
  rgb[1] = 127.5 * (1.0 + std::sin(2.0 * pi * 0.6 * y + 1.1));
  rgb[2] = 127.5 * (1.0 + std::sin(2.0 * pi * 0.5 * (x + z) + 2.0));
}

inline void checker_color(uint32_t vx, uint32_t vy, uint32_t vz, double* rgb) {
  const uint32_t cell = 4;
  const bool on = ((vx / cell) + (vy / cell) + (vz / cell)) & 1u;
  rgb[0] = rgb[1] = rgb[2] = on ? 224.0 : 32.0;
}

}  // namespace synth_detail

// Voxelized implicit surfaces with analytic normals: a voxel is occupied iff
// the surface passes through its cell (the implicit function changes sign
// over the cell corners). Fully deterministic; the seed is accepted for
// interface stability and recorded use only.
inline VoxelCloud synth_cloud(SynthShape shape, int depth, SynthField field,
                              uint64_t seed = 0, double radius_frac = 0.3) {
  (void)seed;
  if (depth < 1 || depth > 9) throw std::runtime_error("synth_cloud: depth must be in [1, 9]");
  const double side = static_cast<double>(1u << depth);
  const double cx = 0.5 * side, cy = 0.5 * side, cz = 0.5 * side;
  const double R = radius_frac * side;

  auto implicit = [&](double x, double y, double z) -> double {
    switch (shape) {
      case SynthShape::sphere: {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        return std::sqrt(dx * dx + dy * dy + dz * dz) - R;
      }
      case SynthShape::plane:
        return z - (cz - 0.25);
      case SynthShape::torus: {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        const double ring = std::sqrt(dx * dx + dy * dy) - R;
        const double r = 0.45 * R;
        return std::sqrt(ring * ring + dz * dz) - r;
      }
    }
    return 0.0;
  };
  auto normal_at = [&](double x, double y, double z) -> Vec3d {
    switch (shape) {
      case SynthShape::sphere: {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (len < 1e-12) return {0, 0, 1};
        return {dx / len, dy / len, dz / len};
      }
      case SynthShape::plane:
        return {0, 0, 1};
      case SynthShape::torus: {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        const double rho = std::sqrt(dx * dx + dy * dy);
        if (rho < 1e-12) return {0, 0, 1};
        const double ring = rho - R;
        const double nx = dx / rho * ring, ny = dy / rho * ring;
        const double len = std::sqrt(nx * nx + ny * ny + dz * dz);
        if (len < 1e-12) return {0, 0, 1};
        return {nx / len, ny / len, dz / len};
      }
    }
    return {0, 0, 1};
  };

  std::vector<Vec3u> positions;
  std::vector<double> colors;
  std::vector<Vec3d> normals;
  const uint32_t g = 1u << depth;
  for (uint32_t vx = 0; vx < g; ++vx)
    for (uint32_t vy = 0; vy < g; ++vy)
      for (uint32_t vz = 0; vz < g; ++vz) {
        // the implicit functions are 1-Lipschitz, so a cell whose center is
        // farther than the half-diagonal cannot contain the surface
        if (std::abs(implicit(vx + 0.5, vy + 0.5, vz + 0.5)) > 0.9) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int c = 0; c < 8; ++c) {
          const double f = implicit(vx + ((c >> 2) & 1), vy + ((c >> 1) & 1), vz + (c & 1));
          lo = std::min(lo, f);
          hi = std::max(hi, f);
        }
        if (lo > 0.0 || hi < 0.0) continue;
        positions.push_back({vx, vy, vz});
        double rgb[3];
        if (field == SynthField::smooth_gradient)
          synth_detail::smooth_color(vx / side, vy / side, vz / side, rgb);
        else
          synth_detail::checker_color(vx, vy, vz, rgb);
        colors.insert(colors.end(), rgb, rgb + 3);
        normals.push_back(normal_at(vx, vy, vz));
      }
  return make_cloud(depth, std::move(positions), std::move(colors), 3, std::move(normals));
}

inline SynthShape parse_shape(const std::string& s) {
  if (s == "sphere") return SynthShape::sphere;
  if (s == "plane") return SynthShape::plane;
  if (s == "torus") return SynthShape::torus;
  throw std::runtime_error("unknown shape: " + s);
}

inline SynthField parse_field(const std::string& s) {
  if (s == "smooth-gradient") return SynthField::smooth_gradient;
  if (s == "checker") return SynthField::checker;
  throw std::runtime_error("unknown attribute field: " + s);
}

}  // namespace bvpc
