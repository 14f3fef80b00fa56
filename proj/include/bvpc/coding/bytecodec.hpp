#pragma once

#include <zlib.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bvpc {

// Deterministic lossless byte-compressor stage applied to each container
// section. Codec 0 is the identity and is always available; codec 1 is
// deflate at a fixed level with the raw size carried in front.
enum class ByteCodec : uint8_t { identity = 0, deflate = 1 };

inline std::vector<uint8_t> byte_compress(const std::vector<uint8_t>& raw, ByteCodec codec) {
  switch (codec) {
    case ByteCodec::identity:
      return raw;
    case ByteCodec::deflate: {
      uLongf bound = compressBound(static_cast<uLong>(raw.size()));
      std::vector<uint8_t> out(8 + bound);
      const uint64_t n = raw.size();
      for (int b = 0; b < 8; ++b) out[b] = static_cast<uint8_t>((n >> (8 * b)) & 0xff);
      if (compress2(out.data() + 8, &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("byte_compress: deflate failed");
      out.resize(8 + bound);
      return out;
    }
  }
  throw std::runtime_error("byte_compress: unknown codec id");
}

inline std::vector<uint8_t> byte_decompress(const std::vector<uint8_t>& data, ByteCodec codec) {
  switch (codec) {
    case ByteCodec::identity:
      return data;
    case ByteCodec::deflate: {
      if (data.size() < 8) throw std::runtime_error("byte_decompress: truncated section");
      uint64_t n = 0;
      for (int b = 0; b < 8; ++b) n |= static_cast<uint64_t>(data[b]) << (8 * b);
      std::vector<uint8_t> out(n);
      uLongf len = static_cast<uLongf>(n);
      if (n > 0 &&
          uncompress(out.data(), &len, data.data() + 8, static_cast<uLong>(data.size() - 8)) != Z_OK)
        throw std::runtime_error("byte_decompress: inflate failed");
      if (len != n) throw std::runtime_error("byte_decompress: size mismatch");
      return out;
    }
  }
  throw std::runtime_error("byte_decompress: unknown codec id");
}

inline uint32_t payload_crc32(const std::vector<uint8_t>& data) {
  return static_cast<uint32_t>(crc32(0, data.data(), static_cast<uInt>(data.size())));
}

}  // namespace bvpc
