#include "sparch/weights.hpp"

#include "sparch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>

namespace sparch {

namespace {

constexpr double kRowSumTolerance = 1e-12;

using Triplet = Eigen::Triplet<double, Index>;

SparseMatrix from_triplets(Index n, const std::vector<Triplet>& triplets) {
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.prune(0.0);
  m.makeCompressed();
  return m;
}

// Kahn's algorithm on the dependency graph j -> i (w_ij > 0 means i depends on j).
// Ready sites are released smallest index first so the result is deterministic.
std::optional<Permutation> topological_order(const SparseMatrix& m) {
  const Index n = m.rows();
  std::vector<Index> pending(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<Index>> dependents(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      ++pending[static_cast<std::size_t>(i)];
      dependents[static_cast<std::size_t>(it.col())].push_back(i);
    }
  }
  std::priority_queue<Index, std::vector<Index>, std::greater<>> ready;
  for (Index i = 0; i < n; ++i) {
    if (pending[static_cast<std::size_t>(i)] == 0) ready.push(i);
  }
  Permutation order;
  order.reserve(static_cast<std::size_t>(n));
  while (!ready.empty()) {
    const Index j = ready.top();
    ready.pop();
    order.push_back(j);
    for (Index i : dependents[static_cast<std::size_t>(j)]) {
      if (--pending[static_cast<std::size_t>(i)] == 0) ready.push(i);
    }
  }
  if (static_cast<Index>(order.size()) != n) return std::nullopt;
  return order;
}

void require_lattice(Index d) {
  if (d < 2) throw InvalidDomain("lattice side d must be at least 2");
}

}  // namespace

SparseWeights::SparseWeights(Index n) : matrix_(n, n) {
  if (n < 0) throw InvalidWeights("negative matrix size");
  matrix_.makeCompressed();
  classify();
}

SparseWeights::SparseWeights(SparseMatrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) throw InvalidWeights("weight matrix must be square");
  for (Index i = 0; i < matrix_.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(matrix_, i); it; ++it) {
      const double w = it.value();
      if (!std::isfinite(w)) throw InvalidWeights("weights must be finite");
      if (w < 0.0) throw InvalidWeights("weights must be nonnegative");
      if (it.row() == it.col() && w != 0.0) {
        throw InvalidWeights("weight matrix must have a zero diagonal (entry " + std::to_string(i) + ")");
      }
    }
  }
  matrix_.prune(0.0);
  matrix_.makeCompressed();
  classify();
}

SparseWeights SparseWeights::from_entries(Index n, std::span<const Entry> entries) {
  if (n < 0) throw InvalidWeights("negative matrix size");
  std::vector<Triplet> triplets;
  triplets.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n) {
      throw InvalidWeights("entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                           ") outside a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    }
    triplets.emplace_back(e.row, e.col, e.weight);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseWeights(std::move(m));
}

void SparseWeights::classify() {
  const Index n = matrix_.rows();
  strictly_lower_ = true;
  strictly_upper_ = true;
  bool any_row = false;
  bool standardized = true;
  for (Index i = 0; i < n; ++i) {
    double sum = 0.0;
    bool nonzero_row = false;
    for (SparseMatrix::InnerIterator it(matrix_, i); it; ++it) {
      if (it.col() >= i) strictly_lower_ = false;
      if (it.col() <= i) strictly_upper_ = false;
      sum += it.value();
      nonzero_row = true;
    }
    if (nonzero_row) {
      any_row = true;
      if (std::abs(sum - 1.0) > kRowSumTolerance) standardized = false;
    }
  }
  row_standardized_ = any_row && standardized;

  if (strictly_lower_) {
    Permutation identity(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) identity[static_cast<std::size_t>(i)] = i;
    causal_order_ = std::move(identity);
  } else if (strictly_upper_) {
    Permutation reversal(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) reversal[static_cast<std::size_t>(i)] = n - 1 - i;
    causal_order_ = std::move(reversal);
  } else {
    causal_order_ = topological_order(matrix_);
  }
}

std::vector<SparseWeights::Entry> SparseWeights::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
  for (Index i = 0; i < matrix_.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(matrix_, i); it; ++it) {
      out.push_back({it.row(), it.col(), it.value()});
    }
  }
  return out;
}

Vector SparseWeights::row_sums() const {
  Vector sums = Vector::Zero(size());
  for (Index i = 0; i < matrix_.outerSize(); ++i) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(matrix_, i); it; ++it) s += it.value();
    sums(i) = s;
  }
  return sums;
}

SparseWeights SparseWeights::scaled(double rho) const {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidWeights("weight scale must be finite and nonnegative");
  SparseWeights out(SparseMatrix(rho * matrix_));
  out.site_order_ = site_order_;
  return out;
}

SparseWeights SparseWeights::with_site_order(Permutation order) const {
  if (static_cast<Index>(order.size()) != size()) throw InvalidWeights("site order has the wrong length");
  SparseWeights out = *this;
  out.site_order_ = std::move(order);
  return out;
}

SparseWeights SparseWeights::with_warning(std::string warning) const {
  SparseWeights out = *this;
  out.warning_ = std::move(warning);
  return out;
}

SparseWeights build_rook(Index d) {
  require_lattice(d);
  const Index n = d * d;
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(4 * n));
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) {
      const Index i = r * d + c;
      if (r > 0) triplets.emplace_back(i, i - d, 1.0);
      if (c > 0) triplets.emplace_back(i, i - 1, 1.0);
      if (c + 1 < d) triplets.emplace_back(i, i + 1, 1.0);
      if (r + 1 < d) triplets.emplace_back(i, i + d, 1.0);
    }
  }
  return row_standardize(SparseWeights(from_triplets(n, triplets)));
}

SparseWeights build_queen(Index d) {
  require_lattice(d);
  const Index n = d * d;
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(8 * n));
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) {
      for (Index dr = -1; dr <= 1; ++dr) {
        for (Index dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const Index rr = r + dr;
          const Index cc = c + dc;
          if (rr < 0 || rr >= d || cc < 0 || cc >= d) continue;
          triplets.emplace_back(r * d + c, rr * d + cc, 1.0);
        }
      }
    }
  }
  return SparseWeights(from_triplets(n, triplets));
}

SparseWeights graph_lag(const SparseWeights& base, Index k) {
  if (k < 1) throw InvalidWeights("lag order must be at least 1");
  const Index n = base.size();
  std::vector<std::vector<Index>> adjacency(static_cast<std::size_t>(n));
  for (const auto& e : base.entries()) {
    adjacency[static_cast<std::size_t>(e.row)].push_back(e.col);
    adjacency[static_cast<std::size_t>(e.col)].push_back(e.row);
  }
  for (auto& list : adjacency) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  std::vector<Triplet> triplets;
  std::vector<Index> depth(static_cast<std::size_t>(n), -1);
  std::vector<Index> touched;
  std::deque<Index> frontier;
  for (Index source = 0; source < n; ++source) {
    depth[static_cast<std::size_t>(source)] = 0;
    touched.assign(1, source);
    frontier.assign(1, source);
    while (!frontier.empty()) {
      const Index v = frontier.front();
      frontier.pop_front();
      const Index dv = depth[static_cast<std::size_t>(v)];
      if (dv == k) {
        triplets.emplace_back(source, v, 1.0);
        continue;
      }
      for (Index u : adjacency[static_cast<std::size_t>(v)]) {
        if (depth[static_cast<std::size_t>(u)] >= 0) continue;
        depth[static_cast<std::size_t>(u)] = dv + 1;
        touched.push_back(u);
        frontier.push_back(u);
      }
    }
    for (Index v : touched) depth[static_cast<std::size_t>(v)] = -1;
  }

  auto lag = row_standardize(SparseWeights(from_triplets(n, triplets)));
  if (lag.empty() && n > 0) {
    return lag.with_warning("lag order " + std::to_string(k) + " exceeds the graph diameter; matrix is empty");
  }
  return lag;
}

SparseWeights build_queen_lag(Index d, Index k) {
  require_lattice(d);
  if (k < 1) throw InvalidWeights("lag order must be at least 1");
  return graph_lag(build_queen(d), k);
}

SparseWeights build_knn(const SpatialDomain& domain, Index q_neighbors) {
  const Index n = domain.size();
  if (q_neighbors < 1 || q_neighbors >= n) {
    throw InvalidWeights("q_neighbors must satisfy 1 <= q < n (q = " + std::to_string(q_neighbors) + ")");
  }
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(n * q_neighbors));
  std::vector<std::pair<double, Index>> candidates;
  candidates.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    candidates.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) candidates.emplace_back(domain.distance(i, j), j);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + q_neighbors, candidates.end());
    for (Index m = 0; m < q_neighbors; ++m) {
      triplets.emplace_back(i, candidates[static_cast<std::size_t>(m)].second, 1.0);
    }
  }
  return SparseWeights(from_triplets(n, triplets));
}

SparseWeights build_inverse_distance(const SpatialDomain& domain, double cutoff) {
  if (!(cutoff > 0.0)) throw InvalidWeights("inverse-distance cutoff must be positive");
  const Index n = domain.size();
  std::vector<Triplet> triplets;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dist = domain.distance(i, j);
      if (dist == 0.0) throw InvalidDomain("duplicate locations make inverse-distance weights undefined");
      if (dist <= cutoff) triplets.emplace_back(i, j, 1.0 / dist);
    }
  }
  return SparseWeights(from_triplets(n, triplets));
}

SparseWeights row_standardize(const SparseWeights& w) {
  SparseMatrix m = w.matrix();
  for (Index i = 0; i < m.outerSize(); ++i) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) sum += it.value();
    if (sum == 0.0) continue;
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) it.valueRef() /= sum;
  }
  SparseWeights out(std::move(m));
  if (w.site_order()) out = out.with_site_order(*w.site_order());
  return out;
}

SparseWeights build_sparch_p(const SparseWeights& base, const SpatialDomain& domain,
                             std::span<const double> rho, double lag_width) {
  if (rho.empty()) throw InvalidWeights("spARCH(p) needs p >= 1 coefficients");
  if (!(lag_width > 0.0)) throw InvalidWeights("lag width c must be positive");
  for (double r : rho) {
    if (!(r >= 0.0)) throw InvalidWeights("spARCH(p) coefficients must be nonnegative");
  }
  if (base.size() != domain.size()) throw InvalidWeights("base weights do not conform to the domain");
  const auto p = static_cast<Index>(rho.size());
  std::vector<Triplet> triplets;
  for (const auto& e : base.entries()) {
    const double dist = domain.distance(e.row, e.col);
    // Band k holds distances in ((k - 1) c, k c].
    auto band = static_cast<Index>(std::ceil(dist / lag_width));
    if (band >= 1 && static_cast<double>(band - 1) * lag_width >= dist) --band;
    if (band < 1 || band > p) continue;
    triplets.emplace_back(e.row, e.col, e.weight * rho[static_cast<std::size_t>(band - 1)]);
  }
  return SparseWeights(from_triplets(base.size(), triplets));
}

SparseWeights build_oriented(const SparseWeights& base, const SpatialDomain& domain, const Location& origin) {
  if (base.size() != domain.size()) throw InvalidWeights("base weights do not conform to the domain");
  const Index n = domain.size();
  std::vector<double> radius(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) radius[static_cast<std::size_t>(i)] = domain.distance_to(i, origin);

  std::vector<Triplet> triplets;
  for (const auto& e : base.entries()) {
    if (radius[static_cast<std::size_t>(e.row)] < radius[static_cast<std::size_t>(e.col)]) {
      triplets.emplace_back(e.row, e.col, e.weight);
    }
  }
  Permutation order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return radius[static_cast<std::size_t>(a)] < radius[static_cast<std::size_t>(b)];
  });
  return SparseWeights(from_triplets(n, triplets)).with_site_order(std::move(order));
}

SparseWeights build_arch_embedding(Index n, std::span<const double> alpha) {
  if (n < 1) throw InvalidWeights("series length must be positive");
  if (alpha.empty()) throw InvalidWeights("ARCH embedding needs p >= 1 coefficients");
  for (double a : alpha) {
    if (!(a >= 0.0)) throw InvalidWeights("ARCH coefficients must be nonnegative");
  }
  const auto p = static_cast<Index>(alpha.size());
  std::vector<Triplet> triplets;
  for (Index i = 0; i < n; ++i) {
    for (Index lag = 1; lag <= p && i - lag >= 0; ++lag) {
      triplets.emplace_back(i, i - lag, alpha[static_cast<std::size_t>(lag - 1)]);
    }
  }
  return SparseWeights(from_triplets(n, triplets));
}

SparseWeights build_spatiotemporal(std::span<const SparseWeights> lag_weights, Index time_points,
                                   std::span<const double> self) {
  if (lag_weights.empty()) throw InvalidWeights("need at least the instantaneous block W_0");
  if (time_points < 1) throw InvalidWeights("need at least one time point");
  const Index n = lag_weights.front().size();
  for (const auto& w : lag_weights) {
    if (w.size() != n) throw InvalidWeights("all lag blocks must share dimension n");
  }
  if (!self.empty() && self.size() != lag_weights.size()) {
    throw InvalidWeights("self weights need one entry per lag block");
  }
  for (std::size_t tau = 0; tau < self.size(); ++tau) {
    if (!(self[tau] >= 0.0) || !std::isfinite(self[tau])) throw InvalidWeights("self weights must be nonnegative");
    if (tau == 0 && self[tau] != 0.0) throw InvalidWeights("the instantaneous block has no self weight");
  }
  std::vector<Triplet> triplets;
  for (Index t = 0; t < time_points; ++t) {
    for (std::size_t tau = 0; tau < lag_weights.size(); ++tau) {
      const Index source = t - static_cast<Index>(tau);
      if (source < 0) break;
      for (const auto& e : lag_weights[tau].entries()) {
        triplets.emplace_back(t * n + e.row, source * n + e.col, e.weight);
      }
      if (tau < self.size() && self[tau] > 0.0) {
        for (Index i = 0; i < n; ++i) triplets.emplace_back(t * n + i, source * n + i, self[tau]);
      }
    }
  }
  return SparseWeights(from_triplets(n * time_points, triplets));
}

std::optional<Permutation> triangularize(const SparseWeights& w) {
  if (w.strictly_lower() || w.strictly_upper()) return w.causal_order();
  return topological_order(w.matrix());
}

double squared_norm1(const SparseWeights& w) {
  const SparseMatrix w2 = (w.matrix() * w.matrix()).pruned();
  Vector col_sums = Vector::Zero(w.size());
  for (Index i = 0; i < w2.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(w2, i); it; ++it) col_sums(it.col()) += std::abs(it.value());
  }
  return w.size() > 0 ? col_sums.maxCoeff() : 0.0;
}

double support_bound(const SparseWeights& w) {
  const double norm = squared_norm1(w);
  if (norm == 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(norm, -0.25);
}

}  // namespace sparch
