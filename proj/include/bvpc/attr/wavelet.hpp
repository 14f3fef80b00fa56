#pragma once

#include <Eigen/Dense>
#include <unordered_map>

#include "bvpc/math/gram.hpp"

namespace bvpc {

namespace detail {

// Orthonormalizer R with R^T G R = I via eigen-decomposition of the
// positive definite matrix G. Diagonal matrices keep their index order so
// that the order-1 path reproduces the Haar butterflies entry for entry.
inline Eigen::MatrixXd orthonormalizer(const Eigen::MatrixXd& G) {
  const int n = static_cast<int>(G.rows());
  bool diagonal = true;
  for (int c = 0; c < n && diagonal; ++c)
    for (int r = 0; r < n; ++r)
      if (r != c && G(r, c) != 0.0) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (G(i, i) <= 0.0) throw std::runtime_error("orthonormalizer: non-positive diagonal");
      R(i, i) = 1.0 / std::sqrt(G(i, i));
    }
    return R;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("orthonormalizer: eigen-decomposition failed");
  const Eigen::VectorXd lam = eig.eigenvalues();
  if (lam.minCoeff() <= 0.0)
    throw std::runtime_error("orthonormalizer: matrix not positive definite after rank reduction");
  return eig.eigenvectors() * lam.cwiseInverse().cwiseSqrt().asDiagonal();
}

inline Eigen::MatrixXd dense_submatrix(const SpMat& A, const std::vector<int>& rows,
                                       const std::vector<int>& cols) {
  std::vector<int> row_of(A.rows(), -1);
  for (size_t i = 0; i < rows.size(); ++i) row_of[rows[i]] = static_cast<int>(i);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(rows.size(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j)
    for (SpMat::InnerIterator it(A, cols[j]); it; ++it)
      if (row_of[it.row()] >= 0) D(row_of[it.row()], static_cast<int>(j)) = it.value();
  return D;
}

}  // namespace detail

// Detail subspace between two consecutive levels: a null-space basis Z of the
// cross Gram plus the orthonormal analysis blocks.
struct WaveletTransition {
  Eigen::MatrixXd Z;          // n_fine x n_detail, identity rows on the odd columns
  std::vector<int> odd;       // local fine indices carrying the identity block, ascending
  Eigen::MatrixXd top;        // n_coarse x n_fine   orthonormal low-pass rows
  Eigen::MatrixXd bottom;     // n_detail x n_fine   orthonormal high-pass rows
};

struct WaveletLevel {
  std::vector<int> retained;  // full-rank candidate subset, ascending candidate ids
  Eigen::MatrixXd R;          // orthonormalizer of the retained Gram
  Eigen::MatrixXd gram;       // retained Gram, dense
};

// The full multiresolution transform of attribute samples: a critically
// sampled orthonormal cascade from the finest level down to base_level.
// Everything is derived from geometry only, so encoder and decoder construct
// identical transforms.
class AttributeWavelet {
 public:
  AttributeWavelet(const VoxelCloud& cloud, const OctreeLevels& octree, BasisOrder order,
                   int base_level = 0, double rank_tol = 1e-10)
      : multires_(build_multires(cloud, octree, order)), base_level_(base_level) {
    const int L = multires_.num_levels;
    if (base_level_ < 0 || base_level_ > L)
      throw std::runtime_error("AttributeWavelet: base level out of range");
    levels_.resize(L + 1);

    // Gram chain over the full candidate sets, then per-level rank reduction.
    std::vector<GramSystem> grams(L + 1);
    grams[L] = gram_at_finest(multires_, Eigen::MatrixXd::Zero(cloud.size(), 0));
    for (int l = L - 1; l >= base_level_; --l) grams[l] = gram_recursion(multires_, grams[l + 1]);

    for (int l = L; l >= base_level_; --l) {
      auto& lev = levels_[l];
      if (l == L) {
        for (int i = 0; i < multires_.count[L]; ++i)
          if (multires_.finest_diag[i] != 0.0) lev.retained.push_back(i);
      } else {
        RankRevealingLdlt ldlt;
        ldlt.compute(grams[l].gram, rank_tol);
        lev.retained = ldlt.retained();
      }
      lev.gram = detail::dense_submatrix(grams[l].gram, lev.retained, lev.retained);
      lev.R = detail::orthonormalizer(lev.gram);
    }

    transitions_.resize(L);
    for (int l = base_level_; l < L; ++l)
      transitions_[l] = build_transition(grams[l + 1], levels_[l], levels_[l + 1], l);

    point_of_finest_.resize(levels_[L].retained.size());
    for (size_t r = 0; r < levels_[L].retained.size(); ++r)
      point_of_finest_[r] = multires_.finest_to_point[levels_[L].retained[r]];
    if (levels_[L].retained.size() != cloud.size())
      throw std::runtime_error("AttributeWavelet: finest level is not critically sampled");
  }

  int base_level() const { return base_level_; }
  int num_levels() const { return multires_.num_levels; }
  const MultiresLevels& multires() const { return multires_; }
  const WaveletLevel& level(int l) const { return levels_[l]; }
  const WaveletTransition& transition(int l) const { return transitions_[l]; }

  struct Coefficients {
    Eigen::MatrixXd base;                  // n_base x channels
    std::vector<Eigen::MatrixXd> details;  // per level l in [base, L): n_detail x channels
  };

  Coefficients analyze(const Eigen::MatrixXd& point_values) const {
    const int L = multires_.num_levels;
    Coefficients out;
    out.details.resize(L);
    Eigen::MatrixXd cur(point_of_finest_.size(), point_values.cols());
    for (size_t r = 0; r < point_of_finest_.size(); ++r)
      cur.row(r) = point_values.row(point_of_finest_[r]);
    for (int l = L - 1; l >= base_level_; --l) {
      out.details[l] = transitions_[l].bottom * cur;
      cur = transitions_[l].top * cur;
    }
    out.base = std::move(cur);
    return out;
  }

  Eigen::MatrixXd synthesize(const Coefficients& coeffs) const {
    const int L = multires_.num_levels;
    Eigen::MatrixXd cur = coeffs.base;
    for (int l = base_level_; l < L; ++l) {
      Eigen::MatrixXd next = transitions_[l].top.transpose() * cur;
      if (coeffs.details[l].size() > 0) next += transitions_[l].bottom.transpose() * coeffs.details[l];
      cur = std::move(next);
    }
    Eigen::MatrixXd values(cur.rows(), cur.cols());
    for (size_t r = 0; r < point_of_finest_.size(); ++r)
      values.row(point_of_finest_[r]) = cur.row(r);
    return values;
  }

 private:
  WaveletTransition build_transition(const GramSystem& fine_gram, const WaveletLevel& coarse,
                                     const WaveletLevel& fine, int l) {
    WaveletTransition t;
    const int nc = static_cast<int>(coarse.retained.size());
    const int nf = static_cast<int>(fine.retained.size());
    const int nd = nf - nc;
    if (nd < 0) throw std::runtime_error("wavelet: rank accounting error (negative detail count)");

    const SpMat cross_full = multires_.refine[l] * fine_gram.gram;
    const Eigen::MatrixXd M = detail::dense_submatrix(cross_full, coarse.retained, fine.retained);

    // Even-column selection: the fine columns forming the invertible block A.
    // The constant-spline path takes the child sharing each block's origin
    // (which makes the split reproduce the Haar butterflies exactly); the
    // tri-linear path picks pivot columns by rank-revealing QR so that A
    // stays well conditioned.
    std::vector<int> even;
    std::vector<uint8_t> is_even(nf, 0);
    if (multires_.order == BasisOrder::constant) {
      std::unordered_map<uint64_t, int> coarse_pos;
      for (int i = 0; i < nc; ++i)
        coarse_pos.emplace(multires_.pos_key[fine_gram.level - 1][coarse.retained[i]], i);
      std::vector<int> natural;
      for (int j = 0; j < nf; ++j) {
        auto it = coarse_pos.find(multires_.pos_key[fine_gram.level][fine.retained[j]]);
        if (it != coarse_pos.end()) natural.push_back(j);
      }
      even.reserve(nc);
      Eigen::MatrixXd Q(nc, nc);
      int r = 0;
      auto try_column = [&](int j) {
        if (r >= nc) return;
        Eigen::VectorXd v = M.col(j);
        const double v0 = v.norm();
        if (v0 == 0.0) return;
        for (int rep = 0; rep < 2; ++rep)
          if (r > 0) v -= Q.leftCols(r) * (Q.leftCols(r).transpose() * v);
        if (v.norm() > 1e-9 * v0) {
          Q.col(r++) = v / v.norm();
          even.push_back(j);
          is_even[j] = 1;
        }
      };
      for (int j : natural) try_column(j);
      for (int j = 0; j < nf && r < nc; ++j)
        if (!is_even[j]) try_column(j);
      if (r != nc)
        throw std::runtime_error("wavelet: rank accounting error (even-column selection)");
      std::sort(even.begin(), even.end());
    } else {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
      qr.setThreshold(1e-9);
      qr.compute(M);
      if (qr.rank() < nc)
        throw std::runtime_error("wavelet: rank accounting error (cross Gram rank deficient)");
      const auto& piv = qr.colsPermutation().indices();
      even.assign(piv.data(), piv.data() + nc);
      std::sort(even.begin(), even.end());
      for (int j : even) is_even[j] = 1;
    }
    for (int j = 0; j < nf; ++j)
      if (!is_even[j]) t.odd.push_back(j);

    // Z = [-A^{-1} B; I] scattered back to fine index order.
    Eigen::MatrixXd A(nc, nc), B(nc, nd);
    for (int i = 0; i < nc; ++i) A.col(i) = M.col(even[i]);
    for (int i = 0; i < nd; ++i) B.col(i) = M.col(t.odd[i]);
    Eigen::MatrixXd X = A.colPivHouseholderQr().solve(B);
    t.Z = Eigen::MatrixXd::Zero(nf, nd);
    for (int i = 0; i < nc; ++i) t.Z.row(even[i]) = -X.row(i);
    for (int i = 0; i < nd; ++i) t.Z(t.odd[i], i) = 1.0;

    const Eigen::MatrixXd psi_gram = t.Z.transpose() * fine.gram * t.Z;
    const Eigen::MatrixXd S = nd > 0 ? detail::orthonormalizer(psi_gram) : Eigen::MatrixXd(0, 0);

    t.top = coarse.R.transpose() * M * fine.R;
    t.bottom = S.transpose() * t.Z.transpose() * fine.gram * fine.R;
    return t;
  }

  MultiresLevels multires_;
  int base_level_;
  std::vector<WaveletLevel> levels_;
  std::vector<WaveletTransition> transitions_;
  std::vector<int> point_of_finest_;
};

}  // namespace bvpc
