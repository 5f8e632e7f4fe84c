#include "sparch/domain.hpp"

#include "sparch/errors.hpp"

#include <cmath>
#include <string>

namespace sparch {

Metric parse_metric(std::string_view name) {
  if (name == "L1" || name == "l1" || name == "manhattan") return Metric::L1;
  if (name == "L2" || name == "l2" || name == "euclidean") return Metric::L2;
  if (name == "Linf" || name == "linf" || name == "max" || name == "chebyshev") return Metric::Linf;
  throw InvalidDomain("unknown metric '" + std::string(name) + "'");
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::L1: return "L1";
    case Metric::L2: return "L2";
    case Metric::Linf: return "Linf";
  }
  return "L2";
}

namespace {

template <typename Diff>
double norm_of(const Diff& diff, Metric metric) {
  switch (metric) {
    case Metric::L1: return diff.cwiseAbs().sum();
    case Metric::L2: return diff.norm();
    case Metric::Linf: return diff.cwiseAbs().maxCoeff();
  }
  return diff.norm();
}

}  // namespace

double distance(const Location& a, const Location& b, Metric metric) {
  if (a.coords.size() != b.coords.size()) {
    throw InvalidDomain("locations have different dimensions");
  }
  const auto n = static_cast<Index>(a.coords.size());
  const Eigen::Map<const Vector> va(a.coords.data(), n);
  const Eigen::Map<const Vector> vb(b.coords.data(), n);
  return norm_of(va - vb, metric);
}

SpatialDomain::SpatialDomain(Matrix coords, Metric metric) : coords_(std::move(coords)), metric_(metric) {
  if (coords_.rows() < 1) throw InvalidDomain("domain needs at least one site");
  if (coords_.cols() < 1) throw InvalidDomain("locations need at least one coordinate");
  if (!coords_.allFinite()) throw InvalidDomain("location coordinates must be finite");
}

SpatialDomain SpatialDomain::lattice(Index d, Metric metric) {
  if (d < 1) throw InvalidDomain("lattice side must be positive");
  Matrix coords(d * d, 2);
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) {
      coords(r * d + c, 0) = static_cast<double>(r + 1);
      coords(r * d + c, 1) = static_cast<double>(c + 1);
    }
  }
  return SpatialDomain(std::move(coords), metric);
}

Location SpatialDomain::location(Index i) const {
  Location loc;
  loc.coords.resize(static_cast<std::size_t>(dimension()));
  for (Index k = 0; k < dimension(); ++k) loc.coords[static_cast<std::size_t>(k)] = coords_(i, k);
  return loc;
}

double SpatialDomain::distance(Index i, Index j) const {
  return norm_of(coords_.row(i) - coords_.row(j), metric_);
}

double SpatialDomain::distance_to(Index i, const Location& s) const {
  if (static_cast<Index>(s.coords.size()) != dimension()) {
    throw InvalidDomain("location dimension does not match the domain");
  }
  const Eigen::Map<const Eigen::RowVectorXd> vs(s.coords.data(), dimension());
  return norm_of(coords_.row(i) - vs, metric_);
}

}  // namespace sparch
