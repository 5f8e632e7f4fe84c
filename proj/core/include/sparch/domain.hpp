#pragma once

#include "sparch/types.hpp"

#include <string_view>

namespace sparch {

enum class Metric { L1, L2, Linf };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric metric);

/// A point s in R^q.
struct Location {
  std::vector<double> coords;
};

double distance(const Location& a, const Location& b, Metric metric);

/// Ordered set of n sites with a distance metric. Order matters: triangular
/// constructions and all data vectors are indexed by it.
class SpatialDomain {
 public:
  /// One site per row of `coords`.
  SpatialDomain(Matrix coords, Metric metric);

  /// The d x d integer lattice {1..d}^2 in row-major order: site (r, c) has index
  /// (r - 1) * d + (c - 1).
  static SpatialDomain lattice(Index d, Metric metric = Metric::L2);

  [[nodiscard]] Index size() const noexcept { return coords_.rows(); }
  [[nodiscard]] Index dimension() const noexcept { return coords_.cols(); }
  [[nodiscard]] Metric metric() const noexcept { return metric_; }
  [[nodiscard]] const Matrix& coordinates() const noexcept { return coords_; }

  [[nodiscard]] Location location(Index i) const;
  [[nodiscard]] double distance(Index i, Index j) const;
  [[nodiscard]] double distance_to(Index i, const Location& s) const;

 private:
  Matrix coords_;
  Metric metric_;
};

}  // namespace sparch
