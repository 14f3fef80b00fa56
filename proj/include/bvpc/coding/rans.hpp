#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bvpc {

// Static-model rANS over a signed-integer alphabet. Symbols within
// [-kEscapeBound, kEscapeBound] are coded directly; anything outside is coded
// as an escape slot with the raw value carried in a side list. 32-bit state,
// 16-bit renormalization, 14-bit frequency precision.
class RansModel {
 public:
  static constexpr int kPrecision = 14;
  static constexpr uint32_t kTotal = 1u << kPrecision;
  static constexpr int64_t kEscapeBound = 255;
  static constexpr int kSlots = 2 * kEscapeBound + 2;  // direct symbols + escape

  static int slot_of(int64_t s) {
    if (s < -kEscapeBound || s > kEscapeBound) return kSlots - 1;
    return static_cast<int>(s + kEscapeBound);
  }
  static int64_t symbol_of_slot(int slot) { return slot - kEscapeBound; }
  static bool is_escape_slot(int slot) { return slot == kSlots - 1; }

  // Normalized frequency table from symbol counts; every occurring slot keeps
  // a nonzero frequency (largest-remainder rounding).
  static RansModel from_symbols(const std::vector<int64_t>& symbols) {
    std::vector<uint64_t> counts(kSlots, 0);
    for (int64_t s : symbols) ++counts[slot_of(s)];
    RansModel m;
    m.freq_.assign(kSlots, 0);
    uint64_t total = symbols.size();
    if (total == 0) return m;
    uint64_t assigned = 0;
    std::vector<std::pair<double, int>> remainders;
    for (int i = 0; i < kSlots; ++i) {
      if (counts[i] == 0) continue;
      const double exact = static_cast<double>(counts[i]) * kTotal / static_cast<double>(total);
      uint32_t f = static_cast<uint32_t>(exact);
      if (f == 0) f = 1;
      m.freq_[i] = f;
      assigned += f;
      remainders.emplace_back(exact - f, i);
    }
    // distribute the leftover to the largest remainders, shrink the largest
    // frequencies on overflow
    while (assigned < kTotal) {
      std::sort(remainders.begin(), remainders.end(),
                [](const auto& a, const auto& b) { return a.first > b.first; });
      for (auto& [r, i] : remainders) {
        if (assigned == kTotal) break;
        ++m.freq_[i];
        ++assigned;
        r -= 1.0;
      }
    }
    while (assigned > kTotal) {
      int best = -1;
      for (int i = 0; i < kSlots; ++i)
        if (m.freq_[i] > 1 && (best < 0 || m.freq_[i] > m.freq_[best])) best = i;
      if (best < 0) throw std::runtime_error("RansModel: cannot normalize frequencies");
      --m.freq_[best];
      --assigned;
    }
    m.finalize();
    return m;
  }

  void finalize() {
    cum_.assign(kSlots + 1, 0);
    for (int i = 0; i < kSlots; ++i) cum_[i + 1] = cum_[i] + freq_[i];
    slot_lut_.assign(kTotal, 0);
    for (int i = 0; i < kSlots; ++i)
      for (uint32_t j = cum_[i]; j < cum_[i + 1]; ++j) slot_lut_[j] = static_cast<uint16_t>(i);
  }

  uint32_t freq(int slot) const { return freq_[slot]; }
  uint32_t cum(int slot) const { return cum_[slot]; }
  int lookup(uint32_t v) const { return slot_lut_[v]; }
  bool empty() const { return cum_.empty() || cum_[kSlots] == 0; }

  // sparse table serialization: u16 entry count, then (u16 slot, u16 freq)
  void serialize(std::vector<uint8_t>& out) const {
    uint16_t n = 0;
    for (int i = 0; i < kSlots; ++i) n += (freq_[i] > 0);
    out.push_back(static_cast<uint8_t>(n & 0xff));
    out.push_back(static_cast<uint8_t>(n >> 8));
    for (int i = 0; i < kSlots; ++i) {
      if (freq_[i] == 0) continue;
      out.push_back(static_cast<uint8_t>(i & 0xff));
      out.push_back(static_cast<uint8_t>(i >> 8));
      out.push_back(static_cast<uint8_t>(freq_[i] & 0xff));
      out.push_back(static_cast<uint8_t>(freq_[i] >> 8));
    }
  }

  static RansModel deserialize(const uint8_t* data, size_t size, size_t& pos) {
    auto get16 = [&]() -> uint16_t {
      if (pos + 2 > size) throw std::runtime_error("RansModel: truncated table");
      uint16_t v = static_cast<uint16_t>(data[pos] | (data[pos + 1] << 8));
      pos += 2;
      return v;
    };
    RansModel m;
    m.freq_.assign(kSlots, 0);
    const uint16_t n = get16();
    uint32_t total = 0;
    for (uint16_t e = 0; e < n; ++e) {
      const uint16_t slot = get16();
      const uint16_t f = get16();
      if (slot >= kSlots) throw std::runtime_error("RansModel: invalid slot");
      m.freq_[slot] = f;
      total += f;
    }
    if (n > 0 && total != kTotal) throw std::runtime_error("RansModel: frequencies do not sum");
    m.finalize();
    return m;
  }

 private:
  std::vector<uint32_t> freq_;
  std::vector<uint32_t> cum_;
  std::vector<uint16_t> slot_lut_;
};

struct RansPayload {
  std::vector<uint8_t> bytes;     // 4-byte final state then 16-bit words
  std::vector<int64_t> escapes;   // raw values of escape symbols, forward order
};

inline RansPayload rans_encode(const std::vector<int64_t>& symbols, const RansModel& model) {
  constexpr uint32_t kLow = 1u << 16;
  RansPayload out;
  for (int64_t s : symbols)
    if (RansModel::is_escape_slot(RansModel::slot_of(s))) out.escapes.push_back(s);

  uint32_t x = kLow;
  std::vector<uint16_t> words;
  for (size_t i = symbols.size(); i-- > 0;) {
    const int slot = RansModel::slot_of(symbols[i]);
    const uint32_t f = model.freq(slot);
    if (f == 0) throw std::runtime_error("rans_encode: symbol with zero frequency");
    const uint64_t x_max = static_cast<uint64_t>(f) << 18;
    while (x >= x_max) {
      words.push_back(static_cast<uint16_t>(x & 0xffff));
      x >>= 16;
    }
    x = ((x / f) << RansModel::kPrecision) + (x % f) + model.cum(slot);
  }
  out.bytes.reserve(4 + words.size() * 2);
  for (int b = 0; b < 4; ++b) out.bytes.push_back(static_cast<uint8_t>((x >> (8 * b)) & 0xff));
  for (size_t i = words.size(); i-- > 0;) {
    out.bytes.push_back(static_cast<uint8_t>(words[i] & 0xff));
    out.bytes.push_back(static_cast<uint8_t>(words[i] >> 8));
  }
  return out;
}

inline std::vector<int64_t> rans_decode(const std::vector<uint8_t>& bytes,
                                        const std::vector<int64_t>& escapes,
                                        const RansModel& model, size_t count) {
  constexpr uint32_t kLow = 1u << 16;
  if (count == 0) return {};
  if (model.empty()) throw std::runtime_error("rans_decode: empty model");
  if (bytes.size() < 4) throw std::runtime_error("rans_decode: truncated stream");
  uint32_t x = 0;
  for (int b = 0; b < 4; ++b) x |= static_cast<uint32_t>(bytes[b]) << (8 * b);
  size_t pos = 4;
  size_t esc = 0;
  std::vector<int64_t> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const uint32_t v = x & (RansModel::kTotal - 1);
    const int slot = model.lookup(v);
    const uint32_t f = model.freq(slot);
    x = f * (x >> RansModel::kPrecision) + v - model.cum(slot);
    while (x < kLow) {
      if (pos + 2 > bytes.size()) throw std::runtime_error("rans_decode: truncated stream");
      x = (x << 16) | static_cast<uint32_t>(bytes[pos] | (bytes[pos + 1] << 8));
      pos += 2;
    }
    if (RansModel::is_escape_slot(slot)) {
      if (esc >= escapes.size()) throw std::runtime_error("rans_decode: missing escape value");
      out.push_back(escapes[esc++]);
    } else {
      out.push_back(RansModel::symbol_of_slot(slot));
    }
  }
  return out;
}

}  // namespace bvpc
