#pragma once

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "bvpc/core/octree.hpp"
#include "bvpc/math/basis.hpp"
#include "bvpc/math/sparse_ldlt.hpp"

namespace bvpc {

using SpMat = Eigen::SparseMatrix<double>;

// Candidate basis layout of a multiresolution ladder. Level num_levels is the
// finest; refine[l] holds the two-scale coefficients mapping level-(l+1)
// candidates to level-l candidates. For order 1 the levels are the binary
// tree levels and the candidates are occupied blocks; for order 2 the levels
// are cubic and the candidates are the unique block corners.
struct MultiresLevels {
  BasisOrder order;
  int depth = 0;
  int num_levels = 0;
  std::vector<int> count;
  std::vector<std::vector<uint64_t>> pos_key;  // packed position, for coarse/fine matching
  std::vector<SpMat> refine;                   // refine[l]: count[l] x count[l+1]
  Eigen::VectorXd finest_diag;                 // diagonal Gram at the finest level
  std::vector<int> finest_to_point;            // finest candidate -> cloud point, or -1
};

inline MultiresLevels build_multires(const VoxelCloud& cloud, const OctreeLevels& octree,
                                     BasisOrder order) {
  MultiresLevels m;
  m.order = order;
  m.depth = cloud.depth;

  if (order == BasisOrder::constant) {
    m.num_levels = octree.binary_levels();
    m.count.resize(m.num_levels + 1);
    m.pos_key.resize(m.num_levels + 1);
    m.refine.resize(m.num_levels);
    for (int l = 0; l <= m.num_levels; ++l) {
      const auto& nodes = octree.binary_level(l);
      m.count[l] = static_cast<int>(nodes.size());
      m.pos_key[l].resize(nodes.size());
      for (size_t b = 0; b < nodes.size(); ++b) {
        const Vec3u o = octree.block_origin(l, nodes[b]);
        m.pos_key[l][b] = pack_corner(o[0], o[1], o[2]);
      }
    }
    for (int l = 0; l < m.num_levels; ++l) {
      const auto& fine = octree.binary_level(l + 1);
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(fine.size());
      for (size_t c = 0; c < fine.size(); ++c)
        trips.emplace_back(fine[c].parent, static_cast<int>(c), 1.0);
      SpMat A(m.count[l], m.count[l + 1]);
      A.setFromTriplets(trips.begin(), trips.end());
      m.refine[l] = std::move(A);
    }
    m.finest_diag = Eigen::VectorXd::Ones(m.count[m.num_levels]);
    m.finest_to_point.resize(m.count[m.num_levels]);
    for (int i = 0; i < m.count[m.num_levels]; ++i) m.finest_to_point[i] = i;
    return m;
  }

  // order 2: corners of the cubic levels, two-scale weights 2^-|k|_1
  m.num_levels = cloud.depth;
  m.count.resize(m.num_levels + 1);
  m.pos_key.resize(m.num_levels + 1);
  m.refine.resize(m.num_levels);
  for (int l = 0; l <= m.num_levels; ++l) {
    const auto& cs = octree.corners(l);
    m.count[l] = static_cast<int>(cs.size());
    m.pos_key[l].resize(cs.size());
    for (size_t i = 0; i < cs.size(); ++i)
      m.pos_key[l][i] = pack_corner(cs.coords[i][0], cs.coords[i][1], cs.coords[i][2]);
  }
  for (int l = 0; l < m.num_levels; ++l) {
    const auto& coarse = octree.corners(l);
    const auto& fine = octree.corners(l + 1);
    const int64_t half = 1ll << (cloud.depth - l - 1);
    std::vector<Eigen::Triplet<double>> trips;
    for (size_t i = 0; i < coarse.size(); ++i) {
      const auto& p = coarse.coords[i];
      for (int kx = -1; kx <= 1; ++kx)
        for (int ky = -1; ky <= 1; ++ky)
          for (int kz = -1; kz <= 1; ++kz) {
            const int64_t x = p[0] + kx * half;
            const int64_t y = p[1] + ky * half;
            const int64_t z = p[2] + kz * half;
            if (x < 0 || y < 0 || z < 0) continue;
            const int32_t j = fine.find(static_cast<uint32_t>(x), static_cast<uint32_t>(y),
                                        static_cast<uint32_t>(z));
            if (j < 0) continue;
            const int norm1 = std::abs(kx) + std::abs(ky) + std::abs(kz);
            trips.emplace_back(static_cast<int>(i), j, std::ldexp(1.0, -norm1));
          }
    }
    SpMat A(m.count[l], m.count[l + 1]);
    A.setFromTriplets(trips.begin(), trips.end());
    m.refine[l] = std::move(A);
  }
  const auto& finest = octree.corners(m.num_levels);
  m.finest_diag = Eigen::VectorXd::Zero(m.count[m.num_levels]);
  m.finest_to_point.assign(m.count[m.num_levels], -1);
  std::unordered_map<uint64_t, int> point_index;
  point_index.reserve(cloud.size() * 2);
  for (size_t i = 0; i < cloud.size(); ++i)
    point_index.emplace(pack_corner(cloud.positions[i][0], cloud.positions[i][1],
                                    cloud.positions[i][2]),
                        static_cast<int>(i));
  for (size_t c = 0; c < finest.size(); ++c) {
    auto it = point_index.find(m.pos_key[m.num_levels][c]);
    if (it != point_index.end()) {
      m.finest_diag[c] = 1.0;
      m.finest_to_point[c] = it->second;
    }
  }
  return m;
}

// Gram matrix and moment vector of one level's candidate basis under the
// counting measure.
struct GramSystem {
  int level = 0;
  SpMat gram;              // candidates x candidates, possibly singular
  Eigen::MatrixXd moments; // candidates x channels
};

inline GramSystem gram_at_finest(const MultiresLevels& m, const Eigen::MatrixXd& point_values) {
  GramSystem sys;
  sys.level = m.num_levels;
  const int n = m.count[m.num_levels];
  sys.gram.resize(n, n);
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i)
    if (m.finest_diag[i] != 0.0) trips.emplace_back(i, i, m.finest_diag[i]);
  sys.gram.setFromTriplets(trips.begin(), trips.end());
  sys.moments = Eigen::MatrixXd::Zero(n, point_values.cols());
  for (int i = 0; i < n; ++i)
    if (m.finest_to_point[i] >= 0) sys.moments.row(i) = point_values.row(m.finest_to_point[i]);
  return sys;
}

// The N x N voxel-level system in point indexing: gram is the identity and
// the moments are the raw attribute values.
inline GramSystem gram_at_voxel_level(const VoxelCloud& cloud) {
  GramSystem sys;
  sys.level = 3 * cloud.depth;
  const int n = static_cast<int>(cloud.size());
  sys.gram.resize(n, n);
  sys.gram.setIdentity();
  sys.moments.resize(n, cloud.attr_dim);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < cloud.attr_dim; ++k) sys.moments(i, k) = cloud.attr(i)[k];
  return sys;
}

// One step of the two-scale recursion: moments and Gram at the next coarser
// level from the finer one.
inline GramSystem gram_recursion(const MultiresLevels& m, const GramSystem& fine) {
  const int l = fine.level - 1;
  if (l < 0 || fine.level > m.num_levels)
    throw std::runtime_error("gram_recursion: level out of range");
  const SpMat& A = m.refine[l];
  if (A.cols() != fine.gram.rows())
    throw std::runtime_error("gram_recursion: index maps missing for this level");
  GramSystem coarse;
  coarse.level = l;
  const SpMat AG = A * fine.gram;
  coarse.gram = AG * A.transpose();
  coarse.moments = A * fine.moments;
  return coarse;
}

// Cross Gram between level l and level l+1 over the full candidate sets.
inline SpMat cross_gram(const MultiresLevels& m, const GramSystem& fine) {
  return m.refine[fine.level - 1] * fine.gram;
}

struct Projection {
  Eigen::MatrixXd coeffs;     // candidates x channels, zero at dropped rows
  std::vector<int> retained;  // full-rank candidate subset used by the solve
};

// Least-squares projection: solves gram * F = moments on a full-rank subset
// of the candidates. Direct sparse factorization up to 20000 candidates,
// conjugate gradient (relative tolerance 1e-10) above.
inline Projection project(const GramSystem& sys, double rank_tol = 1e-10) {
  const int n = static_cast<int>(sys.gram.rows());
  Projection out;
  RankRevealingLdlt ldlt;
  ldlt.compute(sys.gram, rank_tol);
  out.retained = ldlt.retained();
  out.coeffs = Eigen::MatrixXd::Zero(n, sys.moments.cols());
  if (n <= 20000) {
    for (int ch = 0; ch < sys.moments.cols(); ++ch)
      out.coeffs.col(ch) = ldlt.solve(sys.moments.col(ch));
    return out;
  }
  // large system: conjugate gradient on the retained submatrix
  const int r = static_cast<int>(out.retained.size());
  std::vector<int> to_sub(n, -1);
  for (int i = 0; i < r; ++i) to_sub[out.retained[i]] = i;
  std::vector<Eigen::Triplet<double>> trips;
  for (int c = 0; c < sys.gram.outerSize(); ++c) {
    if (to_sub[c] < 0) continue;
    for (SpMat::InnerIterator it(sys.gram, c); it; ++it)
      if (to_sub[it.row()] >= 0) trips.emplace_back(to_sub[it.row()], to_sub[c], it.value());
  }
  SpMat sub(r, r);
  sub.setFromTriplets(trips.begin(), trips.end());
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-10);
  cg.setMaxIterations(10ll * n);
  cg.compute(sub);
  for (int ch = 0; ch < sys.moments.cols(); ++ch) {
    Eigen::VectorXd bsub(r);
    for (int i = 0; i < r; ++i) bsub[i] = sys.moments(out.retained[i], ch);
    Eigen::VectorXd xsub = cg.solve(bsub);
    if (cg.info() != Eigen::Success)
      throw std::runtime_error("project: iterative solve failed (numerical rank)");
    for (int i = 0; i < r; ++i) out.coeffs(out.retained[i], ch) = xsub[i];
  }
  return out;
}

}  // namespace bvpc
