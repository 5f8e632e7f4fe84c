#include "sparch/diagnostics.hpp"

#include "sparch/errors.hpp"

#include <cmath>

namespace sparch {

MoranResult morans_i(const Vector& x, const SparseWeights& w) {
  const Index n = x.size();
  if (w.size() != n) throw InvalidModel("x and W differ in size");
  if (w.empty()) throw DegenerateInput("Moran's I needs a weight matrix with at least one nonzero entry");
  const Vector z = x.array() - x.mean();
  const double zz = z.squaredNorm();
  if (!(zz > 0.0)) throw DegenerateInput("Moran's I is undefined for a constant series");

  const SparseMatrix& m = w.matrix();
  const double s0 = m.sum();
  const SparseMatrix sym = SparseMatrix(m + SparseMatrix(m.transpose()));
  const double s1 = 0.5 * sym.squaredNorm();
  const Vector row = w.row_sums();
  const Vector col = SparseMatrix(m.transpose()) * Vector::Ones(n);
  const double s2 = (row + col).squaredNorm();

  const double nd = static_cast<double>(n);
  MoranResult r;
  r.I = (nd / s0) * z.dot(m * z) / zz;
  r.expectation = -1.0 / (nd - 1.0);
  const double second = (nd * nd * s1 - nd * s2 + 3.0 * s0 * s0) / (s0 * s0 * (nd * nd - 1.0));
  const double var = second - r.expectation * r.expectation;
  r.std = var > 0.0 ? std::sqrt(var) : 0.0;
  if (r.std > 0.0) {
    r.z = (r.I - r.expectation) / r.std;
    r.p = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  } else {
    r.z = 0.0;
    r.p = 1.0;
  }
  return r;
}

SpatialAcf spatial_acf(const Vector& x, const SparseWeights& base, Index max_lag) {
  if (max_lag < 1) throw InvalidModel("max_lag must be at least 1");
  SpatialAcf acf;
  for (Index k = 1; k <= max_lag; ++k) acf.lags.push_back({k, morans_i(x, graph_lag(base, k))});
  return acf;
}

SpatialAcf spatial_acf(const Vector& x, Index lattice_side, Index max_lag) {
  if (max_lag < 1) throw InvalidModel("max_lag must be at least 1");
  SpatialAcf acf;
  for (Index k = 1; k <= max_lag; ++k) acf.lags.push_back({k, morans_i(x, build_queen_lag(lattice_side, k))});
  return acf;
}

std::vector<DiagnosticRow> residual_diagnostics(const FitResult& fit, const SparseWeights& w_diag) {
  if (fit.xi.size() == 0) throw InvalidModel("fit carries no residuals");
  std::vector<DiagnosticRow> rows;
  rows.push_back({"xi", morans_i(fit.xi, w_diag)});
  rows.push_back({"xi^2", morans_i(fit.xi.array().square().matrix(), w_diag)});
  if (fit.is_sparch_family() && fit.eps.size() == fit.xi.size()) {
    rows.push_back({"eps", morans_i(fit.eps, w_diag)});
    rows.push_back({"eps^2", morans_i(fit.eps.array().square().matrix(), w_diag)});
  }
  return rows;
}

}  // namespace sparch
