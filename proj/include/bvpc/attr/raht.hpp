#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "bvpc/core/octree.hpp"

namespace bvpc {

// Region-adaptive Haar transform coefficients. Exactly one coefficient per
// input sample and channel: the dc plus, for every binary tree node with two
// children, one high-pass row. Serialization order is level-major from the
// coarsest level, node-Morton-minor within a level, which the decoder can
// reproduce from geometry alone.
struct RahtCoefficients {
  Eigen::MatrixXd dc;                      // 1 x channels
  std::vector<Eigen::MatrixXd> highpass;   // per binary level: (#two-child nodes) x channels

  size_t total_count() const {
    size_t n = 1;
    for (const auto& h : highpass) n += h.rows();
    return n;
  }
};

inline std::vector<std::vector<uint32_t>> raht_weights(const OctreeLevels& octree) {
  std::vector<std::vector<uint32_t>> w(octree.binary_levels() + 1);
  for (int l = 0; l <= octree.binary_levels(); ++l) {
    const auto& nodes = octree.binary_level(l);
    w[l].resize(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) w[l][i] = nodes[i].weight();
  }
  return w;
}

// Bottom-up pass over the binary Morton tree. Each two-child node applies a
// Givens rotation weighted by the subtree point counts; one-child nodes pass
// their low-pass value through unchanged.
inline RahtCoefficients raht_forward(const VoxelCloud& cloud, const OctreeLevels& octree) {
  const int L = octree.binary_levels();
  const int ch = cloud.attr_dim;
  RahtCoefficients out;
  out.highpass.resize(L);

  Eigen::MatrixXd fine(cloud.size(), ch);
  for (size_t i = 0; i < cloud.size(); ++i)
    for (int k = 0; k < ch; ++k) fine(i, k) = cloud.attr(i)[k];

  for (int l = L - 1; l >= 0; --l) {
    const auto& nodes = octree.binary_level(l);
    const auto& child_nodes = octree.binary_level(l + 1);
    Eigen::MatrixXd coarse(nodes.size(), ch);
    int nhigh = 0;
    for (const auto& n : nodes) nhigh += (n.child_count == 2);
    Eigen::MatrixXd high(nhigh, ch);
    int h = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.child_count == 1) {
        coarse.row(i) = fine.row(n.first_child);
      } else {
        const int c0 = n.first_child, c1 = n.first_child + 1;
        const double w0 = child_nodes[c0].weight();
        const double w1 = child_nodes[c1].weight();
        const double a = std::sqrt(w0 / (w0 + w1));
        const double b = std::sqrt(w1 / (w0 + w1));
        coarse.row(i) = a * fine.row(c0) + b * fine.row(c1);
        high.row(h++) = -b * fine.row(c0) + a * fine.row(c1);
      }
    }
    out.highpass[l] = std::move(high);
    fine = std::move(coarse);
  }
  out.dc = fine;
  return out;
}

// Top-down transpose of the forward pass.
inline Eigen::MatrixXd raht_inverse(const RahtCoefficients& coeffs, const OctreeLevels& octree) {
  const int L = octree.binary_levels();
  const int ch = static_cast<int>(coeffs.dc.cols());
  Eigen::MatrixXd coarse = coeffs.dc;
  if (coarse.rows() != 1 || static_cast<int>(coeffs.highpass.size()) != L)
    throw std::runtime_error("raht_inverse: coefficient shape mismatch with octree");
  for (int l = 0; l < L; ++l) {
    const auto& nodes = octree.binary_level(l);
    const auto& child_nodes = octree.binary_level(l + 1);
    if (coarse.rows() != static_cast<Eigen::Index>(nodes.size()))
      throw std::runtime_error("raht_inverse: coefficient count mismatch");
    Eigen::MatrixXd fine(child_nodes.size(), ch);
    const auto& high = coeffs.highpass[l];
    int h = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.child_count == 1) {
        fine.row(n.first_child) = coarse.row(i);
      } else {
        const int c0 = n.first_child, c1 = n.first_child + 1;
        const double w0 = child_nodes[c0].weight();
        const double w1 = child_nodes[c1].weight();
        const double a = std::sqrt(w0 / (w0 + w1));
        const double b = std::sqrt(w1 / (w0 + w1));
        fine.row(c0) = a * coarse.row(i) - b * high.row(h);
        fine.row(c1) = b * coarse.row(i) + a * high.row(h);
        ++h;
      }
    }
    if (h != high.rows()) throw std::runtime_error("raht_inverse: high-pass count mismatch");
    coarse = std::move(fine);
  }
  return coarse;
}

// Unnormalized low-pass coefficients at one binary level: per-block means.
inline Eigen::MatrixXd raht_block_means(const VoxelCloud& cloud, const OctreeLevels& octree,
                                        int binary_level) {
  const auto& nodes = octree.binary_level(binary_level);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(nodes.size(), cloud.attr_dim);
  for (size_t b = 0; b < nodes.size(); ++b) {
    for (uint32_t i = nodes[b].begin; i < nodes[b].end; ++i)
      for (int k = 0; k < cloud.attr_dim; ++k) means(b, k) += cloud.attr(i)[k];
    means.row(b) /= static_cast<double>(nodes[b].weight());
  }
  return means;
}

}  // namespace bvpc
