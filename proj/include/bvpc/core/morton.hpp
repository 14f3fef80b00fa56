#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace bvpc {

// Interleaves the low 21 bits of v into every third bit of a 64-bit word.
inline uint64_t spread_bits_3(uint64_t v) {
  v &= 0x1fffff;
  v = (v | (v << 32)) & 0x1f00000000ffffULL;
  v = (v | (v << 16)) & 0x1f0000ff0000ffULL;
  v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
  v = (v | (v << 2)) & 0x1249249249249249ULL;
  return v;
}

inline uint32_t compact_bits_3(uint64_t v) {
  v &= 0x1249249249249249ULL;
  v = (v ^ (v >> 2)) & 0x10c30c30c30c30c3ULL;
  v = (v ^ (v >> 4)) & 0x100f00f00f00f00fULL;
  v = (v ^ (v >> 8)) & 0x1f0000ff0000ffULL;
  v = (v ^ (v >> 16)) & 0x1f00000000ffffULL;
  v = (v ^ (v >> 32)) & 0x1fffffULL;
  return static_cast<uint32_t>(v);
}

// 3d-bit Morton code with bit order x1 y1 z1 x2 y2 z2 ... from the MSB,
// i.e. the x bit of a refinement step comes first.
inline uint64_t morton_encode(uint32_t x, uint32_t y, uint32_t z, int depth) {
  if (depth < 0 || depth > 21) throw std::out_of_range("morton_encode: depth out of range");
  const uint32_t limit = (depth >= 32) ? 0xffffffffu : (1u << depth);
  if (x >= limit || y >= limit || z >= limit)
    throw std::out_of_range("morton_encode: coordinate exceeds 2^depth - 1");
  return (spread_bits_3(x) << 2) | (spread_bits_3(y) << 1) | spread_bits_3(z);
}

inline std::array<uint32_t, 3> morton_decode(uint64_t code) {
  return {compact_bits_3(code >> 2), compact_bits_3(code >> 1), compact_bits_3(code)};
}

}  // namespace bvpc
