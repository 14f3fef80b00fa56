#pragma once

#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>
#include <stdexcept>
#include <vector>

namespace bvpc {

// Sparse LDL^T factorization of a positive semi-definite matrix with pivot
// dropping: a pivot whose diagonal falls below rel_tol times its original
// value is removed from the factorization together with its row and column.
// For a PSD matrix the remaining row of a dropped pivot is itself negligible,
// so no reordering is required, and the surviving pivots factor the principal
// submatrix on the retained index set exactly. The retained set is one
// maximal independent subset; rank() is order-independent.
class RankRevealingLdlt {
 public:
  void compute(const Eigen::SparseMatrix<double>& G, double rel_tol = 1e-10,
               bool use_amd = true) {
    n_ = static_cast<int>(G.rows());
    if (G.cols() != n_) throw std::runtime_error("RankRevealingLdlt: matrix not square");
    rel_tol_ = rel_tol;

    perm_.resize(n_);
    pinv_.resize(n_);
    if (use_amd && n_ > 2) {
      Eigen::SparseMatrix<double, Eigen::ColMajor, int> C = G;
      Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> amd_perm;
      Eigen::AMDOrdering<int> amd;
      amd(C, amd_perm);
      Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p = amd_perm.inverse();
      for (int i = 0; i < n_; ++i) pinv_[i] = p.indices()(i);
    } else {
      for (int i = 0; i < n_; ++i) pinv_[i] = i;
    }
    for (int i = 0; i < n_; ++i) perm_[pinv_[i]] = i;

    // permuted strict upper triangle in CSC form, plus the diagonal
    diag0_.assign(n_, 0.0);
    std::vector<std::vector<std::pair<int, double>>> upper(n_);
    for (int c = 0; c < G.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(G, c); it; ++it) {
        const int i = pinv_[static_cast<int>(it.row())];
        const int j = pinv_[c];
        if (i == j)
          diag0_[i] = it.value();
        else if (i < j)
          upper[j].emplace_back(i, it.value());
      }

    // elimination tree over the full pattern (a superset of the pattern after
    // drops, which is always safe)
    std::vector<int> parent(n_, -1), flag(n_, -1);
    for (int k = 0; k < n_; ++k) {
      flag[k] = k;
      for (const auto& [i0, v] : upper[k]) {
        (void)v;
        int j = i0;
        while (flag[j] != k) {
          if (parent[j] == -1) parent[j] = k;
          flag[j] = k;
          j = parent[j];
        }
      }
    }

    cols_.assign(n_, {});
    d_.assign(n_, 0.0);
    dropped_.assign(n_, 0);
    std::vector<double> y(n_, 0.0);
    std::vector<int> pattern(n_), stack(n_);
    std::fill(flag.begin(), flag.end(), -1);

    for (int k = 0; k < n_; ++k) {
      int top = n_;
      flag[k] = k;
      for (const auto& [i0, v] : upper[k]) {
        if (!dropped_[i0]) y[i0] += v;
        int len = 0;
        int j = i0;
        while (flag[j] != k) {
          pattern[len++] = j;
          flag[j] = k;
          j = parent[j];
        }
        while (len > 0) stack[--top] = pattern[--len];
      }
      double d = diag0_[k];
      for (int s = top; s < n_; ++s) {
        const int j = stack[s];
        const double yj = y[j];
        y[j] = 0.0;
        if (dropped_[j] || yj == 0.0) continue;
        const double lkj = yj / d_[j];
        for (const auto& [i, lij] : cols_[j]) y[i] -= lij * yj;
        d -= lkj * yj;
        cols_[j].emplace_back(k, lkj);
      }
      if (diag0_[k] <= 0.0 || d <= rel_tol_ * diag0_[k]) {
        dropped_[k] = 1;
        d_[k] = 1.0;  // sentinel, never used
      } else {
        d_[k] = d;
      }
    }

    // rows of pivots that were dropped after being appended are dead entries
    for (auto& col : cols_) {
      size_t w = 0;
      for (const auto& e : col)
        if (!dropped_[e.first]) col[w++] = e;
      col.resize(w);
    }

    retained_.clear();
    for (int i = 0; i < n_; ++i)
      if (!dropped_[pinv_[i]]) retained_.push_back(i);
  }

  int size() const { return n_; }
  int rank() const { return static_cast<int>(retained_.size()); }
  // Retained original indices, ascending.
  const std::vector<int>& retained() const { return retained_; }
  bool is_retained(int original_index) const { return !dropped_[pinv_[original_index]]; }

  // Solves G[retained,retained] x = b[retained]; dropped entries of x are 0.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y(n_);
    for (int k = 0; k < n_; ++k) y[k] = dropped_[k] ? 0.0 : b[perm_[k]];
    for (int j = 0; j < n_; ++j) {
      if (dropped_[j]) continue;
      const double yj = y[j];
      if (yj == 0.0) continue;
      for (const auto& [i, lij] : cols_[j]) y[i] -= lij * yj;
    }
    for (int k = 0; k < n_; ++k)
      if (!dropped_[k]) y[k] /= d_[k];
    for (int j = n_ - 1; j >= 0; --j) {
      if (dropped_[j]) continue;
      double acc = y[j];
      for (const auto& [i, lij] : cols_[j]) acc -= lij * y[i];
      y[j] = acc;
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (int k = 0; k < n_; ++k)
      if (!dropped_[k]) x[perm_[k]] = y[k];
    return x;
  }

 private:
  int n_ = 0;
  double rel_tol_ = 1e-10;
  std::vector<int> perm_, pinv_;       // perm_[new] = old, pinv_[old] = new
  std::vector<double> diag0_, d_;
  std::vector<uint8_t> dropped_;       // in permuted index space
  std::vector<int> retained_;          // original indices
  std::vector<std::vector<std::pair<int, double>>> cols_;  // L columns, permuted space
};

}  // namespace bvpc
