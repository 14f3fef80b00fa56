#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "bvpc/coding/bytecodec.hpp"

namespace bvpc {

// Little-endian scalar I/O onto byte buffers.
struct ByteWriter {
  std::vector<uint8_t> bytes;
  void u8(uint8_t v) { bytes.push_back(v); }
  void u16(uint16_t v) {
    for (int b = 0; b < 2; ++b) bytes.push_back(static_cast<uint8_t>((v >> (8 * b)) & 0xff));
  }
  void u32(uint32_t v) {
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<uint8_t>((v >> (8 * b)) & 0xff));
  }
  void u64(uint64_t v) {
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<uint8_t>((v >> (8 * b)) & 0xff));
  }
  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void raw(const std::vector<uint8_t>& v) { bytes.insert(bytes.end(), v.begin(), v.end()); }
};

struct ByteReader {
  const uint8_t* data;
  size_t size;
  size_t pos = 0;

  explicit ByteReader(const std::vector<uint8_t>& v) : data(v.data()), size(v.size()) {}
  ByteReader(const uint8_t* d, size_t s) : data(d), size(s) {}

  void need(size_t n) const {
    if (pos + n > size) throw std::runtime_error("container: section length overrun");
  }
  uint8_t u8() {
    need(1);
    return data[pos++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(data[pos] | (data[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<uint32_t>(data[pos + b]) << (8 * b);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<uint64_t>(data[pos + b]) << (8 * b);
    pos += 8;
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::vector<uint8_t> raw(size_t n) {
    need(n);
    std::vector<uint8_t> v(data + pos, data + pos + n);
    pos += n;
    return v;
  }
};

// Sectioned binary container shared by the geometry and attribute streams:
// magic, version, depth, start level, stepsize, byte-codec id, five section
// lengths, then the sections each passed through the byte-compressor stage.
constexpr uint8_t kContainerVersion = 1;
constexpr int kNumSections = 5;

struct Container {
  std::array<char, 4> magic{};
  uint8_t depth = 0;
  uint8_t start_level = 0;
  double stepsize = 1.0;
  ByteCodec codec = ByteCodec::deflate;
  std::array<std::vector<uint8_t>, kNumSections> sections;  // decompressed
  std::array<uint32_t, kNumSections> packed_sizes{};        // filled by assemble()

  std::vector<uint8_t> assemble() {
    ByteWriter w;
    for (char c : magic) w.u8(static_cast<uint8_t>(c));
    w.u8(kContainerVersion);
    w.u8(depth);
    w.u8(start_level);
    w.f64(stepsize);
    w.u8(static_cast<uint8_t>(codec));
    std::array<std::vector<uint8_t>, kNumSections> packed;
    for (int s = 0; s < kNumSections; ++s) {
      packed[s] = byte_compress(sections[s], codec);
      packed_sizes[s] = static_cast<uint32_t>(packed[s].size());
      w.u32(packed_sizes[s]);
    }
    for (int s = 0; s < kNumSections; ++s) w.raw(packed[s]);
    return std::move(w.bytes);
  }

  static Container parse(const std::vector<uint8_t>& bytes, const char* expected_magic) {
    ByteReader r(bytes);
    Container c;
    for (int i = 0; i < 4; ++i) c.magic[i] = static_cast<char>(r.u8());
    if (std::memcmp(c.magic.data(), expected_magic, 4) != 0)
      throw std::runtime_error(std::string("container: magic mismatch, expected ") +
                               expected_magic);
    const uint8_t version = r.u8();
    if (version != kContainerVersion) throw std::runtime_error("container: version mismatch");
    c.depth = r.u8();
    c.start_level = r.u8();
    c.stepsize = r.f64();
    c.codec = static_cast<ByteCodec>(r.u8());
    std::array<uint32_t, kNumSections> lens{};
    for (int s = 0; s < kNumSections; ++s) lens[s] = r.u32();
    for (int s = 0; s < kNumSections; ++s)
      c.sections[s] = byte_decompress(r.raw(lens[s]), c.codec);
    return c;
  }
};

}  // namespace bvpc
