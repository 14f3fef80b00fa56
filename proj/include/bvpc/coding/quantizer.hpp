#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace bvpc {

// Uniform midtread quantizer, ties rounding half away from zero. With a zero
// deadzone the reconstruction error is bounded by stepsize/2; a non-zero
// deadzone threshold trades that bound for longer zero runs.
struct QuantizerSpec {
  double stepsize = 1.0;
  int64_t deadzone = 0;
};

inline int64_t quantize(double x, const QuantizerSpec& spec) {
  if (spec.stepsize <= 0.0) throw std::runtime_error("quantize: stepsize must be positive");
  int64_t q = static_cast<int64_t>(std::llround(x / spec.stepsize));
  if (std::llabs(q) <= spec.deadzone) q = 0;
  return q;
}

inline double dequantize(int64_t q, const QuantizerSpec& spec) { return q * spec.stepsize; }

}  // namespace bvpc
