#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "bvpc/coding/bitio.hpp"
#include "bvpc/coding/bytecodec.hpp"
#include "bvpc/coding/container.hpp"
#include "bvpc/coding/quantizer.hpp"
#include "bvpc/coding/rans.hpp"
#include "bvpc/coding/rlgr.hpp"

using namespace bvpc;

TEST_CASE("bit io roundtrip") {
  std::mt19937 rng(3);
  BitWriter bw;
  std::vector<std::pair<uint64_t, int>> writes;
  std::uniform_int_distribution<int> nbits(1, 24);
  for (int i = 0; i < 500; ++i) {
    const int n = nbits(rng);
    const uint64_t v = rng() & ((1ull << n) - 1);
    writes.emplace_back(v, n);
    bw.put_bits(v, n);
  }
  const auto bytes = bw.take();
  BitReader br(bytes);
  for (const auto& [v, n] : writes) REQUIRE(br.get_bits(n) == v);
  CHECK_THROWS(BitReader(bytes.data(), 0).get_bit());
}

TEST_CASE("quantizer examples and bound") {
  QuantizerSpec unit{1.0, 0};
  CHECK(quantize(0.0, unit) == 0);
  CHECK(dequantize(quantize(0.0, unit), unit) == 0.0);
  CHECK(quantize(0.5, unit) == 1);  // tie rounds away from zero
  CHECK(dequantize(1, unit) == 1.0);
  CHECK(quantize(-0.5, unit) == -1);

  QuantizerSpec dead{2.0, 1};
  CHECK(quantize(1.9, dead) == 0);  // round(0.95)=1, then deadzoned
  CHECK(quantize(3.1, dead) == 2);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> x(-1000.0, 1000.0);
  std::uniform_real_distribution<double> step(1e-3, 10.0);
  for (int i = 0; i < 1000000; ++i) {
    QuantizerSpec s{step(rng), 0};
    const double v = x(rng);
    const double err = std::abs(v - dequantize(quantize(v, s), s));
    REQUIRE(err <= s.stepsize / 2 * (1 + 1e-12));
  }
}

TEST_CASE("rlgr basics") {
  SECTION("all zeros compress far below one bit per symbol") {
    std::vector<int64_t> zeros(1000, 0);
    const auto bytes = rlgr_encode(zeros);
    CHECK(bytes.size() * 8 < 100);
    CHECK(rlgr_decode(bytes, 1000) == zeros);
  }
  SECTION("roundtrip on random two-sided geometric data") {
    std::mt19937 rng(11);
    std::geometric_distribution<int> mag(0.3);
    std::bernoulli_distribution sign;
    std::uniform_int_distribution<int> len(0, 300);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<int64_t> data(len(rng));
      for (auto& v : data) v = sign(rng) ? mag(rng) : -mag(rng);
      const auto bytes = rlgr_encode(data);
      REQUIRE(rlgr_decode(bytes, data.size()) == data);
    }
  }
  SECTION("doubling variance does not shrink the mean code length") {
    std::mt19937 rng(13);
    auto mean_bits = [&](double p) {
      std::geometric_distribution<int> mag(p);
      std::bernoulli_distribution sign;
      size_t total = 0;
      const int runs = 50, n = 2000;
      for (int r = 0; r < runs; ++r) {
        std::vector<int64_t> data(n);
        for (auto& v : data) v = sign(rng) ? mag(rng) : -mag(rng);
        total += rlgr_encode(data).size() * 8;
      }
      return static_cast<double>(total) / (runs * n);
    };
    CHECK(mean_bits(0.3) >= mean_bits(0.6));
  }
  SECTION("truncated stream throws") {
    std::vector<int64_t> data(64, 5);
    auto bytes = rlgr_encode(data);
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS(rlgr_decode(bytes, data.size()));
  }
}

TEST_CASE("rans basics") {
  SECTION("single-symbol alphabet costs only the state flush") {
    std::vector<int64_t> data(5000, 7);
    const RansModel model = RansModel::from_symbols(data);
    const RansPayload p = rans_encode(data, model);
    CHECK(p.bytes.size() == 4);
    CHECK(rans_decode(p.bytes, p.escapes, model, data.size()) == data);
  }
  SECTION("uniform source approaches eight bits per symbol") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> sym(0, 255);
    std::vector<int64_t> data(100000);
    for (auto& v : data) v = sym(rng);
    const RansModel model = RansModel::from_symbols(data);
    const RansPayload p = rans_encode(data, model);
    const double bits = 8.0 * p.bytes.size() / data.size();
    CHECK(bits >= 7.95);
    CHECK(bits <= 8.2);
    REQUIRE(rans_decode(p.bytes, p.escapes, model, data.size()) == data);
  }
  SECTION("roundtrip over random models and payloads") {
    std::mt19937 rng(19);
    std::uniform_int_distribution<int> len(1, 400);
    std::normal_distribution<double> gauss(0.0, 40.0);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<int64_t> data(len(rng));
      for (auto& v : data) v = static_cast<int64_t>(std::lround(gauss(rng)));
      const RansModel model = RansModel::from_symbols(data);
      const RansPayload p = rans_encode(data, model);
      REQUIRE(rans_decode(p.bytes, p.escapes, model, data.size()) == data);
    }
  }
  SECTION("escape path carries out-of-range values exactly") {
    std::vector<int64_t> data = {0, 1, -100000, 3, 99999999, 0, -1, 300};
    const RansModel model = RansModel::from_symbols(data);
    const RansPayload p = rans_encode(data, model);
    CHECK(p.escapes.size() == 3);
    REQUIRE(rans_decode(p.bytes, p.escapes, model, data.size()) == data);
  }
  SECTION("rate stays within five percent of the model cross entropy") {
    std::mt19937 rng(23);
    std::geometric_distribution<int> mag(0.1);
    std::bernoulli_distribution sign;
    std::vector<int64_t> data(100000);
    for (auto& v : data) v = sign(rng) ? mag(rng) : -mag(rng);
    const RansModel model = RansModel::from_symbols(data);
    const RansPayload p = rans_encode(data, model);
    double ce = 0.0;
    for (int64_t v : data) {
      const int slot = RansModel::slot_of(v);
      ce += -std::log2(model.freq(slot) / static_cast<double>(RansModel::kTotal));
    }
    CHECK(8.0 * p.bytes.size() <= ce * 1.05 + 64.0);
  }
  SECTION("corrupted stream fails to decode") {
    std::vector<int64_t> data(100, 2);
    data[50] = 9;
    const RansModel model = RansModel::from_symbols(data);
    RansPayload p = rans_encode(data, model);
    p.bytes.resize(2);
    CHECK_THROWS(rans_decode(p.bytes, p.escapes, model, data.size()));
  }
}

TEST_CASE("byte codec") {
  std::mt19937 rng(29);
  SECTION("identity roundtrip") {
    std::vector<uint8_t> data(1000);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    CHECK(byte_decompress(byte_compress(data, ByteCodec::identity), ByteCodec::identity) == data);
  }
  SECTION("deflate roundtrip on random bytes") {
    std::vector<uint8_t> data(4096);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    CHECK(byte_decompress(byte_compress(data, ByteCodec::deflate), ByteCodec::deflate) == data);
  }
  SECTION("repeated bytes compress below one percent") {
    std::vector<uint8_t> data(10000, 0xAB);
    CHECK(byte_compress(data, ByteCodec::deflate).size() < 100);
  }
  SECTION("unknown codec id") {
    CHECK_THROWS(byte_compress({1, 2, 3}, static_cast<ByteCodec>(250)));
  }
}

TEST_CASE("container roundtrip and errors") {
  Container c;
  c.magic = {'B', 'V', 'P', 'C'};
  c.depth = 9;
  c.start_level = 2;
  c.stepsize = 0.25;
  c.codec = ByteCodec::deflate;
  std::mt19937 rng(31);
  for (auto& s : c.sections) {
    s.resize(rng() % 2000);
    for (auto& b : s) b = static_cast<uint8_t>(rng());
  }
  const auto bytes = c.assemble();
  const Container parsed = Container::parse(bytes, "BVPC");
  CHECK(parsed.depth == 9);
  CHECK(parsed.start_level == 2);
  CHECK(parsed.stepsize == 0.25);
  for (int s = 0; s < kNumSections; ++s) REQUIRE(parsed.sections[s] == c.sections[s]);

  CHECK_THROWS_WITH(Container::parse(bytes, "BVAT"), Catch::Matchers::ContainsSubstring("magic"));
  auto truncated = bytes;
  truncated.resize(truncated.size() - 5);
  CHECK_THROWS_WITH(Container::parse(truncated, "BVPC"),
                    Catch::Matchers::ContainsSubstring("overrun"));
}
