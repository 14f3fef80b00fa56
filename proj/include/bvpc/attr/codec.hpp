#pragma once

#include <Eigen/Dense>

#include "bvpc/attr/wavelet.hpp"
#include "bvpc/coding/container.hpp"
#include "bvpc/coding/quantizer.hpp"
#include "bvpc/coding/rlgr.hpp"
#include "bvpc/core/octree.hpp"

namespace bvpc {

// BT.709 full-range luma/chroma, chroma centered at 128.
inline Eigen::MatrixXd rgb_to_yuv(const Eigen::MatrixXd& rgb) {
  Eigen::MatrixXd yuv(rgb.rows(), 3);
  for (Eigen::Index i = 0; i < rgb.rows(); ++i) {
    const double r = rgb(i, 0), g = rgb(i, 1), b = rgb(i, 2);
    const double y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    yuv(i, 0) = y;
    yuv(i, 1) = (b - y) / 1.8556 + 128.0;
    yuv(i, 2) = (r - y) / 1.5748 + 128.0;
  }
  return yuv;
}

inline Eigen::MatrixXd yuv_to_rgb(const Eigen::MatrixXd& yuv) {
  Eigen::MatrixXd rgb(yuv.rows(), 3);
  for (Eigen::Index i = 0; i < yuv.rows(); ++i) {
    const double y = yuv(i, 0);
    const double b = (yuv(i, 1) - 128.0) * 1.8556 + y;
    const double r = (yuv(i, 2) - 128.0) * 1.5748 + y;
    const double g = (y - 0.2126 * r - 0.0722 * b) / 0.7152;
    rgb(i, 0) = r;
    rgb(i, 1) = g;
    rgb(i, 2) = b;
  }
  return rgb;
}

inline Eigen::MatrixXd cloud_attributes(const VoxelCloud& cloud) {
  Eigen::MatrixXd values(cloud.size(), cloud.attr_dim);
  for (size_t i = 0; i < cloud.size(); ++i)
    for (int k = 0; k < cloud.attr_dim; ++k) values(i, k) = cloud.attr(i)[k];
  return values;
}

// Reconstruction with all detail coefficients at levels >= smooth_level set
// to zero. For the tri-linear transform the result is continuous across
// block boundaries; levels are cubic for both orders (the order-1 cascade
// zeroes the three binary sublevels of each cubic level).
inline Eigen::MatrixXd smooth_attributes(const VoxelCloud& cloud, const OctreeLevels& octree,
                                         BasisOrder order, int smooth_level) {
  if (smooth_level < 0 || smooth_level > cloud.depth)
    throw std::runtime_error("smooth_attributes: level out of range");
  const AttributeWavelet wavelet(cloud, octree, order, 0);
  auto coeffs = wavelet.analyze(cloud_attributes(cloud));
  const int cut = order == BasisOrder::trilinear ? smooth_level : 3 * smooth_level;
  for (int l = cut; l < wavelet.num_levels(); ++l) coeffs.details[l].setZero();
  return wavelet.synthesize(coeffs);
}

struct AttributeStream {
  std::vector<uint8_t> bytes;
};

namespace attr_detail {

inline void write_channel_symbols(ByteWriter& w, const Eigen::MatrixXd& coeffs,
                                  const QuantizerSpec& spec) {
  for (Eigen::Index ch = 0; ch < coeffs.cols(); ++ch) {
    std::vector<int64_t> syms(coeffs.rows());
    for (Eigen::Index i = 0; i < coeffs.rows(); ++i) syms[i] = quantize(coeffs(i, ch), spec);
    const std::vector<uint8_t> bits = rlgr_encode(syms);
    w.u32(static_cast<uint32_t>(syms.size()));
    w.u32(static_cast<uint32_t>(bits.size()));
    w.raw(bits);
  }
}

inline Eigen::MatrixXd read_channel_symbols(ByteReader& r, int channels,
                                            const QuantizerSpec& spec) {
  Eigen::MatrixXd coeffs;
  for (int ch = 0; ch < channels; ++ch) {
    const uint32_t n = r.u32();
    const uint32_t len = r.u32();
    const std::vector<uint8_t> bits = r.raw(len);
    const std::vector<int64_t> syms = rlgr_decode(bits, n);
    if (ch == 0) coeffs.resize(n, channels);
    if (static_cast<uint32_t>(coeffs.rows()) != n)
      throw std::runtime_error("attribute stream: channel length mismatch");
    for (uint32_t i = 0; i < n; ++i) coeffs(i, ch) = dequantize(syms[i], spec);
  }
  return coeffs;
}

}  // namespace attr_detail

// Full analysis cascade, uniform scalar quantization of every coefficient,
// and per-level per-channel adaptive RLGR.
inline AttributeStream encode_attributes(const VoxelCloud& cloud, const OctreeLevels& octree,
                                         BasisOrder order, int base_level, double stepsize,
                                         bool color_transform = true,
                                         ByteCodec codec = ByteCodec::deflate) {
  const bool yuv = color_transform && cloud.attr_dim == 3;
  const AttributeWavelet wavelet(cloud, octree, order, base_level);
  Eigen::MatrixXd values = cloud_attributes(cloud);
  if (yuv) values = rgb_to_yuv(values);
  const auto coeffs = wavelet.analyze(values);

  const QuantizerSpec spec{stepsize, 0};
  Container c;
  c.magic = {'B', 'V', 'A', 'T'};
  c.depth = static_cast<uint8_t>(cloud.depth);
  c.start_level = static_cast<uint8_t>(base_level);
  c.stepsize = stepsize;
  c.codec = codec;

  {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(order));
    w.u8(static_cast<uint8_t>(cloud.attr_dim));
    w.u8(yuv ? 1 : 0);
    w.u32(static_cast<uint32_t>(cloud.size()));
    c.sections[0] = std::move(w.bytes);
  }
  {
    ByteWriter w;
    attr_detail::write_channel_symbols(w, coeffs.base, spec);
    c.sections[1] = std::move(w.bytes);
  }
  {
    ByteWriter w;
    for (int l = base_level; l < wavelet.num_levels(); ++l)
      attr_detail::write_channel_symbols(w, coeffs.details[l], spec);
    c.sections[2] = std::move(w.bytes);
  }
  AttributeStream out;
  out.bytes = c.assemble();
  return out;
}

// Decode against losslessly known geometry: the transform is rebuilt from
// the positions, the coefficients are dequantized and synthesized, and the
// values at the voxels are the reproduced attributes.
inline Eigen::MatrixXd decode_attributes(const std::vector<uint8_t>& bytes,
                                         const VoxelCloud& geometry,
                                         const OctreeLevels& octree) {
  const Container c = Container::parse(bytes, "BVAT");
  ByteReader meta(c.sections[0]);
  const BasisOrder order = static_cast<BasisOrder>(meta.u8());
  const int channels = meta.u8();
  const bool yuv = meta.u8() != 0;
  const uint32_t n = meta.u32();
  if (n != geometry.size())
    throw std::runtime_error("decode_attributes: geometry size mismatch");
  if (c.depth != geometry.depth)
    throw std::runtime_error("decode_attributes: depth mismatch");

  const QuantizerSpec spec{c.stepsize, 0};
  const AttributeWavelet wavelet(geometry, octree, order, c.start_level);
  AttributeWavelet::Coefficients coeffs;
  {
    ByteReader r(c.sections[1]);
    coeffs.base = attr_detail::read_channel_symbols(r, channels, spec);
  }
  {
    ByteReader r(c.sections[2]);
    coeffs.details.resize(wavelet.num_levels());
    for (int l = c.start_level; l < wavelet.num_levels(); ++l)
      coeffs.details[l] = attr_detail::read_channel_symbols(r, channels, spec);
  }
  Eigen::MatrixXd values = wavelet.synthesize(coeffs);
  if (yuv) values = yuv_to_rgb(values);
  return values;
}

}  // namespace bvpc
