#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "bvpc/geom/codec.hpp"
#include "bvpc/geom/normals.hpp"
#include "bvpc/geom/pruning.hpp"
#include "bvpc/io/synth.hpp"
#include "test_support.hpp"

using namespace bvpc;

TEST_CASE("normal estimation") {
  SECTION("axis-aligned plane") {
    const VoxelCloud plane = synth_cloud(SynthShape::plane, 5, SynthField::smooth_gradient);
    const auto normals = estimate_normals(plane, 12);
    for (const auto& n : normals) {
      CHECK(std::abs(n[0]) < 1e-6);
      CHECK(std::abs(n[1]) < 1e-6);
      CHECK(std::abs(std::abs(n[2]) - 1.0) < 1e-6);
    }
  }
  SECTION("sphere normals are near radial at 7-bit density") {
    const VoxelCloud sphere = synth_cloud(SynthShape::sphere, 7, SynthField::smooth_gradient);
    const auto normals = estimate_normals(sphere, 16);
    const double c = 0.5 * (1 << 7);
    double angular_sum = 0;
    for (size_t i = 0; i < sphere.size(); ++i) {
      const double dx = sphere.positions[i][0] - c, dy = sphere.positions[i][1] - c,
                   dz = sphere.positions[i][2] - c;
      const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
      const double dot = std::abs(
          (dx * normals[i][0] + dy * normals[i][1] + dz * normals[i][2]) / len);
      angular_sum += std::acos(std::min(1.0, dot)) * 180.0 / std::numbers::pi;
    }
    CHECK(angular_sum / sphere.size() <= 10.0);
  }
  SECTION("collinear neighborhood raises the warning flag") {
    std::vector<Vec3u> line;
    for (uint32_t i = 0; i < 16; ++i) line.push_back({i, 3, 3});
    const VoxelCloud c = make_cloud(4, line);
    std::vector<uint8_t> warn;
    const auto normals = estimate_normals(c, 5, &warn);
    CHECK(std::count(warn.begin(), warn.end(), 1) == static_cast<long>(c.size()));
    for (const auto& n : normals) CHECK(std::abs(n[0]) < 1e-9);  // least-spread axis is not x
  }
  SECTION("provided normals pass through") {
    VoxelCloud c = make_cloud(2, {{0, 0, 0}, {3, 3, 3}});
    c.normals = {{1, 0, 0}, {0, 1, 0}};
    ensure_normals(c);
    CHECK(c.normals[0] == Vec3d{1, 0, 0});
  }
  SECTION("preconditions") {
    const VoxelCloud c = make_cloud(2, {{0, 0, 0}, {3, 3, 3}});
    CHECK_THROWS(estimate_normals(c, 2));   // k below 3
    CHECK_THROWS(estimate_normals(c, 5));   // k above N
  }
}

TEST_CASE("sdf control points") {
  SECTION("corner coincident with a voxel has value zero") {
    VoxelCloud c = make_cloud(2, {{0, 0, 0}, {2, 2, 2}});
    c.normals = {{1, 0, 0}, {1, 0, 0}};
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    const int32_t id = tree.corners(c.depth).find(2, 2, 2);
    REQUIRE(id >= 0);
    CHECK(sdf.values[c.depth][id] == 0.0);
  }
  SECTION("sign follows the normal direction") {
    VoxelCloud outside = make_cloud(1, {{0, 0, 0}});
    outside.normals = {{1, 0, 0}};  // normal points toward +x corners
    const OctreeLevels tree(outside);
    const SdfField sdf = compute_sdf(outside, tree);
    const auto& cs = tree.corners(1);
    CHECK(sdf.values[1][cs.find(1, 0, 0)] == 1.0);   // difference vector along the normal
    CHECK(sdf.values[1][cs.find(0, 0, 1)] == 1.0);   // orthogonal: non-negative convention
    VoxelCloud inside = outside;
    inside.normals = {{-1, 0, 0}};  // normal away from the +x corner
    const SdfField sdf2 = compute_sdf(inside, OctreeLevels(inside));
    CHECK(sdf2.values[1][cs.find(1, 0, 0)] == -1.0);
  }
  SECTION("every corner at every level has one value") {
    std::mt19937 rng(3);
    const VoxelCloud c = bvpc_test::random_cloud(rng, 60, 3, 0, true);
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    for (int l = 0; l <= c.depth; ++l) REQUIRE(sdf.values[l].size() == tree.corners(l).size());
  }
}

TEST_CASE("child prediction is tri-linear interpolation") {
  std::array<double, 8> same;
  same.fill(3.25);
  CHECK(predict_child(same, 0.5, 0.0, 0.0) == Catch::Approx(3.25));
  CHECK(predict_child(same, 0.5, 0.5, 0.5) == Catch::Approx(3.25));
  // edge midpoint between corners holding 1 and 3
  std::array<double, 8> edge{};
  edge[0] = 1.0;          // corner (0,0,0)
  edge[4] = 3.0;          // corner (1,0,0)
  CHECK(predict_child(edge, 0.5, 0.0, 0.0) == Catch::Approx(2.0));
  // center of a block with four 0s and four 8s
  std::array<double, 8> center{0, 0, 0, 0, 8, 8, 8, 8};
  CHECK(predict_child(center, 0.5, 0.5, 0.5) == Catch::Approx(4.0));
}

TEST_CASE("in-loop coding arithmetic example") {
  // stepsize 2, original 3.7 against prediction 1.0
  const QuantizerSpec spec{2.0, 0};
  const double g = 3.7 - 1.0;
  const int64_t q = quantize(g, spec);
  CHECK(q == 1);
  const double fhat = 1.0 + dequantize(q, spec);
  CHECK(fhat == Catch::Approx(3.0));
  CHECK(std::abs(3.7 - fhat) <= 1.0);
}

TEST_CASE("linear fields code to zero residuals") {
  // analytic field f = z - z0 sampled on plane cloud corners; with integer
  // start values and unit stepsize the in-loop predictions are exact
  const VoxelCloud c = synth_cloud(SynthShape::plane, 4, SynthField::smooth_gradient);
  const OctreeLevels tree(c);
  SdfField sdf;
  sdf.values.resize(c.depth + 1);
  for (int l = 0; l <= c.depth; ++l) {
    const auto& cs = tree.corners(l);
    sdf.values[l].resize(cs.size());
    for (size_t i = 0; i < cs.size(); ++i)
      sdf.values[l][i] = static_cast<double>(cs.coords[i][2]) - 5.0;
  }
  const CodecTree ct = CodecTree::from_octree(tree, unpruned(tree));
  const InLoopField field = inloop_pass(ct, 0, 1.0, &sdf, nullptr, true, &tree);
  for (int l = 1; l <= c.depth; ++l)
    for (size_t i = 0; i < field.born[l].size(); ++i)
      if (field.born[l][i]) REQUIRE(field.q[l][i] == 0);
}

TEST_CASE("reconstruction error is bounded by half the stepsize at coded corners") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const VoxelCloud c = bvpc_test::random_cloud(rng, 64, 4, 0, true);
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    const double step = std::vector<double>{0.5, 1.0, 2.0, 4.0}[rng() % 4];
    const int l0 = static_cast<int>(rng() % 3);
    const CodecTree ct = CodecTree::from_octree(tree, unpruned(tree));
    const InLoopField field = inloop_pass(ct, l0, step, &sdf, nullptr, false, &tree);
    for (int l = l0; l <= c.depth - 1; ++l) {
      const auto& cs = ct.corners[l];
      for (size_t i = 0; i < cs.size(); ++i) {
        if (!field.born[l][i]) continue;
        const auto& pos = cs.coords[i];
        const int32_t src = tree.corners(l).find(pos[0], pos[1], pos[2]);
        REQUIRE(std::abs(sdf.values[l][src] - field.fhat[l][i]) <=
                step / 2 * (1 + 1e-12) + 1e-12);
      }
    }
  }
}

TEST_CASE("geometry stream parse inverts assemble") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    VoxelCloud c = bvpc_test::random_cloud(rng, 100, 4, 0, true);
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    const PrunedOctree pruned = prune_fixed(tree, 2 + static_cast<int>(rng() % 3));
    const GeometryStream s = encode_geometry_stream(tree, sdf, pruned, 1, 1.0);
    const DecodedGeometry g = parse_geometry_stream(s.bytes);
    CHECK(g.depth == c.depth);
    CHECK(g.start_level == 1);
    // decoded tree equals the encoder-side pruned tree, block for block
    const CodecTree enc = CodecTree::from_octree(tree, pruned);
    for (int l = 0; l <= c.depth; ++l) {
      REQUIRE(g.tree.levels[l].size() == enc.levels[l].size());
      for (size_t b = 0; b < enc.levels[l].size(); ++b) {
        REQUIRE(g.tree.levels[l][b].origin == enc.levels[l][b].origin);
        REQUIRE(g.tree.levels[l][b].leaf == enc.levels[l][b].leaf);
      }
    }
    // decoded control points equal the encoder-side reconstruction
    const InLoopField field = inloop_pass(enc, 1, 1.0, &sdf, nullptr, false, &tree);
    for (int l = 1; l <= c.depth; ++l) {
      if (l >= static_cast<int>(g.field.fhat.size()) || g.field.fhat[l].empty()) continue;
      REQUIRE(g.field.fhat[l].size() == field.fhat[l].size());
      for (size_t i = 0; i < field.fhat[l].size(); ++i)
        if (!std::isnan(field.fhat[l][i]))
          REQUIRE(g.field.fhat[l][i] == field.fhat[l][i]);
    }
  }
}

TEST_CASE("geometry stream integrity errors") {
  std::mt19937 rng(11);
  VoxelCloud c = bvpc_test::random_cloud(rng, 60, 3, 0, true);
  const OctreeLevels tree(c);
  const SdfField sdf = compute_sdf(c, tree);
  const GeometryStream s = encode_geometry_stream(tree, sdf, unpruned(tree), 2, 1.0);
  SECTION("magic mismatch") {
    auto bytes = s.bytes;
    bytes[0] = 'X';
    CHECK_THROWS_WITH(parse_geometry_stream(bytes), Catch::Matchers::ContainsSubstring("magic"));
  }
  SECTION("version mismatch") {
    auto bytes = s.bytes;
    bytes[4] = 99;
    CHECK_THROWS_WITH(parse_geometry_stream(bytes),
                      Catch::Matchers::ContainsSubstring("version"));
  }
  SECTION("section overrun") {
    auto bytes = s.bytes;
    bytes.resize(bytes.size() - 4);
    CHECK_THROWS(parse_geometry_stream(bytes));
  }
}

TEST_CASE("lossless voxel-leaf round trip on synthetic shapes") {
  for (SynthShape shape : {SynthShape::sphere, SynthShape::plane, SynthShape::torus}) {
    VoxelCloud c = synth_cloud(shape, 5, SynthField::smooth_gradient);
    const OctreeLevels tree(c);
    const SdfField sdf = compute_sdf(c, tree);
    const GeometryStream s =
        encode_geometry_stream(tree, sdf, prune_fixed(tree, c.depth), 2, 1.0);
    const VoxelCloud rec = reconstruct_geometry(parse_geometry_stream(s.bytes));
    REQUIRE(rec.size() == c.size());
    REQUIRE(rec.positions == c.positions);
  }
}

TEST_CASE("geometry streams are deterministic") {
  std::mt19937 rng(13);
  VoxelCloud c = bvpc_test::random_cloud(rng, 150, 4, 0, true);
  const OctreeLevels tree(c);
  const SdfField sdf = compute_sdf(c, tree);
  const PrunedOctree pruned = prune_fixed(tree, 3);
  const GeometryStream a = encode_geometry_stream(tree, sdf, pruned, 2, 1.0);
  const GeometryStream b = encode_geometry_stream(tree, sdf, pruned, 2, 1.0);
  REQUIRE(a.bytes == b.bytes);
}

TEST_CASE("rate accounting sums to the container size") {
  std::mt19937 rng(17);
  VoxelCloud c = bvpc_test::random_cloud(rng, 100, 4, 0, true);
  const OctreeLevels tree(c);
  const SdfField sdf = compute_sdf(c, tree);
  const GeometryStream s = encode_geometry_stream(tree, sdf, prune_fixed(tree, 3), 2, 1.0);
  uint64_t total = 0;
  for (const auto& [name, bits] : s.section_bits) total += bits;
  REQUIRE(total == 8 * s.bytes.size());
}
