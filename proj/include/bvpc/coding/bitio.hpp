#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bvpc {

// MSB-first bit writer.
class BitWriter {
 public:
  void put_bit(uint32_t b) {
    if (nbits_ == 0) {
      bytes_.push_back(0);
      nbits_ = 8;
    }
    --nbits_;
    if (b & 1) bytes_.back() |= static_cast<uint8_t>(1u << nbits_);
  }
  void put_bits(uint64_t value, int count) {
    for (int i = count - 1; i >= 0; --i) put_bit(static_cast<uint32_t>(value >> i));
  }
  size_t bit_count() const { return bytes_.size() * 8 - nbits_; }
  std::vector<uint8_t> take() {
    nbits_ = 0;
    return std::move(bytes_);
  }

 private:
  std::vector<uint8_t> bytes_;
  int nbits_ = 0;  // free bits in the last byte
};

class BitReader {
 public:
  explicit BitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  explicit BitReader(const std::vector<uint8_t>& v) : BitReader(v.data(), v.size()) {}

  uint32_t get_bit() {
    const size_t byte = pos_ >> 3;
    if (byte >= size_) throw std::runtime_error("BitReader: truncated stream");
    const uint32_t b = (data_[byte] >> (7 - (pos_ & 7))) & 1u;
    ++pos_;
    return b;
  }
  uint64_t get_bits(int count) {
    uint64_t v = 0;
    for (int i = 0; i < count; ++i) v = (v << 1) | get_bit();
    return v;
  }
  size_t bit_pos() const { return pos_; }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

}  // namespace bvpc
