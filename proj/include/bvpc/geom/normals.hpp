#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "bvpc/core/voxel_cloud.hpp"

namespace bvpc {

namespace normal_detail {

struct KnnIndex {
  std::unordered_map<uint64_t, uint32_t> cells;
  const VoxelCloud* cloud;

  explicit KnnIndex(const VoxelCloud& c) : cloud(&c) {
    cells.reserve(c.size() * 2);
    for (size_t i = 0; i < c.size(); ++i) {
      const auto& p = c.positions[i];
      cells.emplace((uint64_t(p[0]) << 42) | (uint64_t(p[1]) << 21) | p[2],
                    static_cast<uint32_t>(i));
    }
  }

  // k nearest voxels to query point i (including i itself), exact via
  // expanding Chebyshev shells.
  std::vector<uint32_t> query(size_t i, int k) const {
    const auto& q = cloud->positions[i];
    using Cand = std::pair<int64_t, uint32_t>;  // (squared distance, index)
    std::priority_queue<Cand> heap;              // max-heap on distance
    const int64_t side = 1ll << cloud->depth;
    for (int64_t r = 0;; ++r) {
      for (int64_t dx = -r; dx <= r; ++dx)
        for (int64_t dy = -r; dy <= r; ++dy)
          for (int64_t dz = -r; dz <= r; ++dz) {
            if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != r) continue;
            const int64_t x = q[0] + dx, y = q[1] + dy, z = q[2] + dz;
            if (x < 0 || y < 0 || z < 0 || x >= side || y >= side || z >= side) continue;
            auto it = cells.find((uint64_t(x) << 42) | (uint64_t(y) << 21) | uint64_t(z));
            if (it == cells.end()) continue;
            const int64_t d2 = dx * dx + dy * dy + dz * dz;
            if (static_cast<int>(heap.size()) < k)
              heap.emplace(d2, it->second);
            else if (d2 < heap.top().first) {
              heap.pop();
              heap.emplace(d2, it->second);
            }
          }
      if (static_cast<int>(heap.size()) >= k && (r + 1) * (r + 1) >= heap.top().first) break;
      if (r > 2 * side) break;  // exhausted the grid
    }
    std::vector<uint32_t> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top().second);
      heap.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace normal_detail

// Per-voxel unit normals from the smallest principal axis of the k-nearest-
// neighbor covariance, with orientation propagated along a minimum spanning
// tree of the k-NN graph, seeded to point away from the centroid. Degenerate
// (collinear) neighborhoods fall back to the least-spread coordinate axis and
// raise the per-point warning flag.
inline std::vector<Vec3d> estimate_normals(const VoxelCloud& cloud, int k,
                                           std::vector<uint8_t>* warnings = nullptr) {
  const size_t n = cloud.size();
  if (k < 3) throw std::runtime_error("estimate_normals: k must be at least 3");
  if (n < static_cast<size_t>(k)) throw std::runtime_error("estimate_normals: k exceeds point count");

  normal_detail::KnnIndex index(cloud);
  std::vector<Vec3d> normals(n);
  if (warnings) warnings->assign(n, 0);
  std::vector<std::vector<uint32_t>> neighbors(n);

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < n; ++i)
    centroid += Eigen::Vector3d(cloud.positions[i][0], cloud.positions[i][1],
                                cloud.positions[i][2]);
  centroid /= static_cast<double>(n);

  for (size_t i = 0; i < n; ++i) {
    neighbors[i] = index.query(i, k);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (uint32_t j : neighbors[i])
      mean += Eigen::Vector3d(cloud.positions[j][0], cloud.positions[j][1],
                              cloud.positions[j][2]);
    mean /= static_cast<double>(neighbors[i].size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (uint32_t j : neighbors[i]) {
      const Eigen::Vector3d d =
          Eigen::Vector3d(cloud.positions[j][0], cloud.positions[j][1], cloud.positions[j][2]) -
          mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d lam = eig.eigenvalues();  // ascending
    if (lam[1] <= 1e-9 * std::max(lam[2], 1e-12)) {
      int axis = 0;
      for (int a = 1; a < 3; ++a)
        if (cov(a, a) < cov(axis, axis)) axis = a;
      normals[i] = {0, 0, 0};
      normals[i][axis] = 1.0;
      if (warnings) (*warnings)[i] = 1;
    } else {
      const Eigen::Vector3d v = eig.eigenvectors().col(0).normalized();
      normals[i] = {v[0], v[1], v[2]};
    }
  }

  // Kruskal MST over the k-NN edges, weight 1 - |n_i . n_j|
  struct Edge {
    float w;
    uint32_t a, b;
  };
  std::vector<Edge> edges;
  for (size_t i = 0; i < n; ++i)
    for (uint32_t j : neighbors[i]) {
      if (j <= i) continue;
      const double dot = normals[i][0] * normals[j][0] + normals[i][1] * normals[j][1] +
                         normals[i][2] * normals[j][2];
      edges.push_back({static_cast<float>(1.0 - std::abs(dot)), static_cast<uint32_t>(i), j});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.w < b.w; });
  normal_detail::UnionFind uf(n);
  std::vector<std::vector<uint32_t>> tree(n);
  for (const auto& e : edges)
    if (uf.unite(e.a, e.b)) {
      tree[e.a].push_back(e.b);
      tree[e.b].push_back(e.a);
    }

  // orient each component outward from the centroid, then propagate
  std::vector<uint8_t> visited(n, 0);
  std::vector<uint8_t> seen(n, 0);
  for (size_t comp_seed = 0; comp_seed < n; ++comp_seed) {
    if (visited[comp_seed]) continue;
    // collect the component, pick the farthest point from the centroid as root
    std::vector<uint32_t> comp;
    std::vector<uint32_t> stack{static_cast<uint32_t>(comp_seed)};
    visited[comp_seed] = 1;
    while (!stack.empty()) {
      const uint32_t v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (uint32_t w : tree[v])
        if (!visited[w]) {
          visited[w] = 1;
          stack.push_back(w);
        }
    }
    uint32_t root = comp[0];
    double best = -1.0;
    for (uint32_t v : comp) {
      const double d2 =
          (Eigen::Vector3d(cloud.positions[v][0], cloud.positions[v][1], cloud.positions[v][2]) -
           centroid)
              .squaredNorm();
      if (d2 > best) {
        best = d2;
        root = v;
      }
    }
    const Eigen::Vector3d out_dir =
        Eigen::Vector3d(cloud.positions[root][0], cloud.positions[root][1],
                        cloud.positions[root][2]) -
        centroid;
    if (out_dir.dot(Eigen::Vector3d(normals[root][0], normals[root][1], normals[root][2])) < 0)
      for (int a = 0; a < 3; ++a) normals[root][a] = -normals[root][a];
    // BFS flip propagation
    std::vector<uint32_t> queue{root};
    seen[root] = 1;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      const uint32_t v = queue[qi];
      for (uint32_t w : tree[v]) {
        if (seen[w]) continue;
        seen[w] = 1;
        const double dot = normals[v][0] * normals[w][0] + normals[v][1] * normals[w][1] +
                           normals[v][2] * normals[w][2];
        if (dot < 0)
          for (int a = 0; a < 3; ++a) normals[w][a] = -normals[w][a];
        queue.push_back(w);
      }
    }
  }
  return normals;
}

// Passthrough when normals are already present. Clouds too small for a
// covariance fit get a fixed axis normal.
inline void ensure_normals(VoxelCloud& cloud, int k = 16) {
  if (cloud.has_normals()) return;
  if (cloud.size() < 3) {
    cloud.normals.assign(cloud.size(), Vec3d{0.0, 0.0, 1.0});
    return;
  }
  cloud.normals = estimate_normals(cloud, std::min<int>(k, static_cast<int>(cloud.size())));
}

}  // namespace bvpc
