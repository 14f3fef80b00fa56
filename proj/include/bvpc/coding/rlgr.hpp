#pragma once

#include <cstdint>
#include <cstdlib>
#include <vector>

#include "bvpc/coding/bitio.hpp"

namespace bvpc {

// Adaptive run-length / Golomb-Rice coder for signed integers, with backward
// parameter adaptation. Constants follow the published defaults of the
// adaptive RLGR scheme; both parameters start at 1.
namespace rlgr_detail {
constexpr int kKpMax = 80;
constexpr int kShift = 3;
constexpr int kUpGr = 4;  // run mode: complete run of zeros
constexpr int kDnGr = 6;  // run mode: run interrupted
constexpr int kUqGr = 3;  // no-run mode: zero symbol
constexpr int kDqGr = 3;  // no-run mode: non-zero symbol

inline void code_gr(BitWriter& bw, int& krp, uint64_t v) {
  const int kr = krp >> kShift;
  const uint64_t p = v >> kr;
  for (uint64_t i = 0; i < p; ++i) bw.put_bit(1);
  bw.put_bit(0);
  if (kr > 0) bw.put_bits(v & ((1ull << kr) - 1), kr);
  if (p == 0)
    krp = std::max(0, krp - 2);
  else if (p > 1)
    krp = std::min<int64_t>(kKpMax, krp + static_cast<int64_t>(p));
}

inline uint64_t decode_gr(BitReader& br, int& krp) {
  const int kr = krp >> kShift;
  uint64_t p = 0;
  while (br.get_bit() == 1) ++p;
  uint64_t v = (p << kr) | (kr > 0 ? br.get_bits(kr) : 0);
  if (p == 0)
    krp = std::max(0, krp - 2);
  else if (p > 1)
    krp = std::min<int64_t>(kKpMax, krp + static_cast<int64_t>(p));
  return v;
}
}  // namespace rlgr_detail

inline std::vector<uint8_t> rlgr_encode(const std::vector<int64_t>& data) {
  using namespace rlgr_detail;
  BitWriter bw;
  int kp = 1 << kShift, krp = 1 << kShift;
  int k = kp >> kShift;
  size_t i = 0;
  const size_t n = data.size();
  while (i < n) {
    if (k > 0) {
      // run mode: count zeros, emit complete runs of 2^k as single bits
      uint64_t zeros = 0;
      while (i < n && data[i] == 0) {
        ++zeros;
        ++i;
      }
      uint64_t runmax = 1ull << k;
      while (zeros >= runmax) {
        bw.put_bit(0);
        zeros -= runmax;
        kp = std::min(kKpMax, kp + kUpGr);
        k = kp >> kShift;
        runmax = 1ull << k;
      }
      bw.put_bit(1);
      bw.put_bits(zeros, k);
      if (i >= n) break;  // input ended inside the run
      const int64_t val = data[i++];
      const uint64_t mag = static_cast<uint64_t>(val < 0 ? -val : val);
      bw.put_bit(val < 0);
      code_gr(bw, krp, mag - 1);
      kp = std::max(0, kp - kDnGr);
      k = kp >> kShift;
    } else {
      // no-run mode: plain Golomb-Rice on the sign-interleaved value
      const int64_t val = data[i++];
      const uint64_t u = val < 0 ? static_cast<uint64_t>(-2 * val - 1)
                                 : static_cast<uint64_t>(2 * val);
      code_gr(bw, krp, u);
      if (u == 0)
        kp = std::min(kKpMax, kp + kUqGr);
      else
        kp = std::max(0, kp - kDqGr);
      k = kp >> kShift;
    }
  }
  return bw.take();
}

inline std::vector<int64_t> rlgr_decode(const uint8_t* bytes, size_t size, size_t count) {
  using namespace rlgr_detail;
  BitReader br(bytes, size);
  std::vector<int64_t> out;
  out.reserve(count);
  int kp = 1 << kShift, krp = 1 << kShift;
  int k = kp >> kShift;
  while (out.size() < count) {
    if (k > 0) {
      for (;;) {
        if (br.get_bit() == 0) {
          const uint64_t runmax = 1ull << k;
          for (uint64_t t = 0; t < runmax && out.size() < count; ++t) out.push_back(0);
          kp = std::min(kKpMax, kp + kUpGr);
          k = kp >> kShift;
          if (out.size() >= count) return out;
        } else {
          const uint64_t zeros = k > 0 ? br.get_bits(k) : 0;
          for (uint64_t t = 0; t < zeros && out.size() < count; ++t) out.push_back(0);
          if (out.size() >= count) return out;
          const bool neg = br.get_bit() != 0;
          const uint64_t mag = decode_gr(br, krp) + 1;
          out.push_back(neg ? -static_cast<int64_t>(mag) : static_cast<int64_t>(mag));
          kp = std::max(0, kp - kDnGr);
          k = kp >> kShift;
          break;
        }
      }
    } else {
      const uint64_t u = decode_gr(br, krp);
      out.push_back((u & 1) ? -static_cast<int64_t>((u + 1) / 2)
                            : static_cast<int64_t>(u / 2));
      if (u == 0)
        kp = std::min(kKpMax, kp + kUqGr);
      else
        kp = std::max(0, kp - kDqGr);
      k = kp >> kShift;
    }
  }
  return out;
}

inline std::vector<int64_t> rlgr_decode(const std::vector<uint8_t>& bytes, size_t count) {
  return rlgr_decode(bytes.data(), bytes.size(), count);
}

}  // namespace bvpc
