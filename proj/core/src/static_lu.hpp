#pragma once

#include "sparch/types.hpp"

#include <vector>

namespace sparch::detail {

/**
 * Sparse LU without pivoting over a fixed pattern: fill-reducing AMD order and the symbolic
 * fill are computed once, then every factorize() reuses them. Intended for matrices that are
 * (close to) diagonally dominant, where elimination without pivoting is stable; factorize()
 * reports tiny pivots so callers can fall back to a pivoting solver.
 */
class StaticLU {
 public:
  /// `pattern` gives the structural nonzeros; the diagonal is always included.
  explicit StaticLU(const SparseMatrix& pattern);

  [[nodiscard]] Index size() const noexcept { return n_; }
  /// Stored entries of L + U, fill included.
  [[nodiscard]] std::size_t stored() const noexcept { return cols_.size(); }

  /// Slot of original entry (i, j), which must be part of the pattern.
  [[nodiscard]] Index slot(Index i, Index j) const;
  [[nodiscard]] Index diagonal_slot(Index i) const { return diag_[static_cast<std::size_t>(new_of_old_[static_cast<std::size_t>(i)])]; }

  /// Zeroes all values (including fill).
  void clear();
  [[nodiscard]] double& value(Index slot) { return vals_[static_cast<std::size_t>(slot)]; }

  /// In-place factorization. False when some |pivot| <= pivot_tolerance.
  bool factorize(double pivot_tolerance);

  /// Requires a successful factorize().
  [[nodiscard]] Vector solve(const Vector& b) const;

 private:
  Index n_ = 0;
  std::vector<Index> old_of_new_;
  std::vector<Index> new_of_old_;
  std::vector<Index> row_ptr_;
  std::vector<Index> cols_;
  std::vector<Index> diag_;
  std::vector<double> vals_;
  std::vector<double> work_;
};

}  // namespace sparch::detail
