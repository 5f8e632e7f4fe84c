#pragma once

#include "sparch/domain.hpp"
#include "sparch/types.hpp"

#include <optional>
#include <span>
#include <string>

namespace sparch {

/**
 * Nonnegative sparse n x n spatial weight matrix with a zero main diagonal.
 *
 * Instances are immutable. Structural properties (strict lower/upper triangularity,
 * row standardization, and whether some site permutation makes the matrix strictly
 * triangular) are derived from the entries at construction, so they cannot drift
 * out of sync with the data.
 */
class SparseWeights {
 public:
  struct Entry {
    Index row;
    Index col;
    double weight;
  };

  /// The n x n zero matrix.
  explicit SparseWeights(Index n = 0);

  /// Throws InvalidWeights on negative, non-finite, or diagonal nonzero entries.
  explicit SparseWeights(SparseMatrix matrix);

  /// Duplicate (i, j) entries are summed; explicit zeros are dropped.
  static SparseWeights from_entries(Index n, std::span<const Entry> entries);

  [[nodiscard]] Index size() const noexcept { return matrix_.rows(); }
  [[nodiscard]] Index nonzeros() const noexcept { return matrix_.nonZeros(); }
  [[nodiscard]] bool empty() const noexcept { return matrix_.nonZeros() == 0; }
  [[nodiscard]] const SparseMatrix& matrix() const noexcept { return matrix_; }

  [[nodiscard]] double operator()(Index i, Index j) const { return matrix_.coeff(i, j); }
  /// Entries sorted by (row, col).
  [[nodiscard]] std::vector<Entry> entries() const;
  [[nodiscard]] Vector row_sums() const;
  [[nodiscard]] Vector apply(const Vector& x) const { return matrix_ * x; }

  [[nodiscard]] bool strictly_lower() const noexcept { return strictly_lower_; }
  [[nodiscard]] bool strictly_upper() const noexcept { return strictly_upper_; }
  [[nodiscard]] bool row_standardized() const noexcept { return row_standardized_; }

  /// True when some permutation P makes P W P' strictly lower triangular.
  [[nodiscard]] bool triangular() const noexcept { return causal_order_.has_value(); }

  /// Evaluation order in which every site depends only on sites placed before it.
  [[nodiscard]] const std::optional<Permutation>& causal_order() const noexcept { return causal_order_; }

  /// Distance ordering attached by build_oriented (ascending distance to the origin).
  [[nodiscard]] const std::optional<Permutation>& site_order() const noexcept { return site_order_; }

  /// Non-fatal construction notes, e.g. a lag order beyond the graph diameter.
  [[nodiscard]] const std::string& warning() const noexcept { return warning_; }

  /// rho * W; rho must be nonnegative.
  [[nodiscard]] SparseWeights scaled(double rho) const;

  [[nodiscard]] SparseWeights with_site_order(Permutation order) const;
  [[nodiscard]] SparseWeights with_warning(std::string warning) const;

 private:
  void classify();

  SparseMatrix matrix_;
  bool strictly_lower_ = true;
  bool strictly_upper_ = true;
  bool row_standardized_ = false;
  std::optional<Permutation> causal_order_;
  std::optional<Permutation> site_order_;
  std::string warning_;
};

/// Binary Rook contiguity on the d x d lattice (L1 distance 1), row-standardized.
SparseWeights build_rook(Index d);

/// Row-standardized k-th lag Queen contiguity on the d x d lattice: j is a lag-k neighbor
/// of i iff the Queen-graph distance between them is exactly k.
SparseWeights build_queen_lag(Index d, Index k);

/// Binary (unstandardized) Queen contiguity of the d x d lattice.
SparseWeights build_queen(Index d);

/// Row-standardized lag-k neighbors of an arbitrary contiguity graph (edge where w_ij > 0,
/// treated as undirected). Lag is the breadth-first graph distance.
SparseWeights graph_lag(const SparseWeights& base, Index k);

/// Binary q-nearest-neighbor matrix under the domain metric; ties go to the lower index.
SparseWeights build_knn(const SpatialDomain& domain, Index q_neighbors);

/// Inverse-distance weights w_ij = 1 / ||s_i - s_j|| for pairs within `cutoff`.
SparseWeights build_inverse_distance(const SpatialDomain& domain, double cutoff);

/// Each nonzero row divided by its sum; zero rows are left as they are.
SparseWeights row_standardize(const SparseWeights& w);

/// Distance-band spARCH(p) weights: w_ij = base_ij * rho_k when ||s_i - s_j|| lies in
/// ((k - 1) c, k c] for some k <= p.
SparseWeights build_sparch_p(const SparseWeights& base, const SpatialDomain& domain,
                             std::span<const double> rho, double lag_width);

/// Oriented weights: w_ij = base_ij iff ||s_i - s0|| < ||s_j - s0||. The result keeps the
/// domain's site indexing and records the ascending-distance ordering (ties by index).
SparseWeights build_oriented(const SparseWeights& base, const SpatialDomain& domain, const Location& origin);

/// Time-series ARCH(p) embedding: w_ij = alpha_{i-j} for 1 <= i - j <= p.
SparseWeights build_arch_embedding(Index n, std::span<const double> alpha);

/// Space-time block matrix of size nT: block (t, t - tau) = W_tau + self_tau I for tau = 0..p.
/// Site (t, i) has index t * n + i. `self` (optional, one entry per lag, self_0 = 0) weights a
/// site's own past, which a single SparseWeights block cannot hold on its diagonal.
SparseWeights build_spatiotemporal(std::span<const SparseWeights> lag_weights, Index time_points,
                                   std::span<const double> self = {});

/// Permutation P (as a site order) with P W P' strictly lower triangular, if one exists.
std::optional<Permutation> triangularize(const SparseWeights& w);

/// Supremum (||W^2||_1)^(-1/4) of admissible innovation bounds a; +inf when W^2 = 0.
double support_bound(const SparseWeights& w);

/// Column-sum norm ||W^2||_1 = max_j sum_i |(W^2)_ij|.
double squared_norm1(const SparseWeights& w);

}  // namespace sparch
