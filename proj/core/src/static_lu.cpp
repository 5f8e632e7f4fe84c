#include "static_lu.hpp"

#include <Eigen/OrderingMethods>

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace sparch::detail {

StaticLU::StaticLU(const SparseMatrix& pattern) : n_(pattern.rows()) {
  const auto un = static_cast<std::size_t>(n_);
  ColSparseMatrix structure(n_, n_);
  {
    using Triplet = Eigen::Triplet<double, Index>;
    std::vector<Triplet> t;
    for (Index i = 0; i < n_; ++i) {
      t.emplace_back(i, i, 1.0);
      for (SparseMatrix::InnerIterator it(pattern, i); it; ++it) t.emplace_back(i, it.col(), 1.0);
    }
    structure.setFromTriplets(t.begin(), t.end());
  }
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, Index> inverse;
  Eigen::AMDOrdering<Index>()(structure, inverse);
  old_of_new_.assign(inverse.indices().data(), inverse.indices().data() + n_);
  new_of_old_.resize(un);
  for (std::size_t k = 0; k < un; ++k) new_of_old_[static_cast<std::size_t>(old_of_new_[k])] = static_cast<Index>(k);

  // Permuted rows of the original pattern.
  std::vector<std::vector<Index>> rows(un);
  for (Index i = 0; i < n_; ++i) {
    auto& row = rows[static_cast<std::size_t>(new_of_old_[static_cast<std::size_t>(i)])];
    row.push_back(new_of_old_[static_cast<std::size_t>(i)]);
    for (SparseMatrix::InnerIterator it(pattern, i); it; ++it) {
      row.push_back(new_of_old_[static_cast<std::size_t>(it.col())]);
    }
  }

  // Symbolic row-wise elimination: row i gains the upper part of every row k < i it touches.
  std::vector<Index> mark(un, -1);
  row_ptr_.assign(un + 1, 0);
  diag_.resize(un);
  for (Index i = 0; i < n_; ++i) {
    std::vector<Index> cols;
    std::priority_queue<Index, std::vector<Index>, std::greater<>> pending;
    for (Index j : rows[static_cast<std::size_t>(i)]) {
      if (mark[static_cast<std::size_t>(j)] == i) continue;
      mark[static_cast<std::size_t>(j)] = i;
      cols.push_back(j);
      if (j < i) pending.push(j);
    }
    while (!pending.empty()) {
      const Index k = pending.top();
      pending.pop();
      const auto end = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(k) + 1]);
      for (auto q = static_cast<std::size_t>(diag_[static_cast<std::size_t>(k)]) + 1; q < end; ++q) {
        const Index j = cols_[q];
        if (mark[static_cast<std::size_t>(j)] == i) continue;
        mark[static_cast<std::size_t>(j)] = i;
        cols.push_back(j);
        if (j < i) pending.push(j);
      }
    }
    std::sort(cols.begin(), cols.end());
    const auto start = static_cast<Index>(cols_.size());
    for (Index j : cols) {
      if (j == i) diag_[static_cast<std::size_t>(i)] = static_cast<Index>(cols_.size());
      cols_.push_back(j);
    }
    row_ptr_[static_cast<std::size_t>(i)] = start;
    row_ptr_[static_cast<std::size_t>(i) + 1] = static_cast<Index>(cols_.size());
  }
  vals_.assign(cols_.size(), 0.0);
  work_.assign(un, 0.0);
}

Index StaticLU::slot(Index i, Index j) const {
  const auto r = static_cast<std::size_t>(new_of_old_[static_cast<std::size_t>(i)]);
  const Index c = new_of_old_[static_cast<std::size_t>(j)];
  const auto begin = cols_.begin() + row_ptr_[r];
  const auto end = cols_.begin() + row_ptr_[r + 1];
  return static_cast<Index>(std::lower_bound(begin, end, c) - cols_.begin());
}

void StaticLU::clear() { std::fill(vals_.begin(), vals_.end(), 0.0); }

bool StaticLU::factorize(double pivot_tolerance) {
  const Index* rp = row_ptr_.data();
  const Index* cols = cols_.data();
  const Index* diag = diag_.data();
  double* vals = vals_.data();
  double* work = work_.data();
  for (Index i = 0; i < n_; ++i) {
    for (Index p = rp[i]; p < rp[i + 1]; ++p) work[cols[p]] = vals[p];
    for (Index p = rp[i]; p < diag[i]; ++p) {
      const Index k = cols[p];
      const double l = work[k] / vals[diag[k]];
      work[k] = l;
      if (l == 0.0) continue;
      for (Index q = diag[k] + 1; q < rp[k + 1]; ++q) work[cols[q]] -= l * vals[q];
    }
    for (Index p = rp[i]; p < rp[i + 1]; ++p) vals[p] = work[cols[p]];
    if (!(std::abs(vals[diag[i]]) > pivot_tolerance)) return false;
  }
  return true;
}

Vector StaticLU::solve(const Vector& b) const {
  Vector y(n_);
  for (Index i = 0; i < n_; ++i) y(i) = b(old_of_new_[static_cast<std::size_t>(i)]);
  for (Index i = 0; i < n_; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double acc = y(i);
    for (auto p = static_cast<std::size_t>(row_ptr_[ui]); p < static_cast<std::size_t>(diag_[ui]); ++p) {
      acc -= vals_[p] * y(cols_[p]);
    }
    y(i) = acc;
  }
  for (Index i = n_ - 1; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    double acc = y(i);
    for (auto p = static_cast<std::size_t>(diag_[ui]) + 1; p < static_cast<std::size_t>(row_ptr_[ui + 1]); ++p) {
      acc -= vals_[p] * y(cols_[p]);
    }
    y(i) = acc / vals_[static_cast<std::size_t>(diag_[ui])];
  }
  Vector x(n_);
  for (Index i = 0; i < n_; ++i) x(old_of_new_[static_cast<std::size_t>(i)]) = y(i);
  return x;
}

}  // namespace sparch::detail
