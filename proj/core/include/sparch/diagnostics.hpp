#pragma once

#include "sparch/likelihood.hpp"
#include "sparch/types.hpp"
#include "sparch/weights.hpp"

#include <string>
#include <vector>

namespace sparch {

struct MoranResult {
  double I = 0.0;
  double expectation = 0.0;
  double std = 0.0;
  double z = 0.0;
  /// Two-sided normal p-value.
  double p = 1.0;
};

/// Moran's I with moments under the normality assumption. Throws DegenerateInput for a
/// constant x or an all-zero W.
MoranResult morans_i(const Vector& x, const SparseWeights& w);

struct SpatialAcf {
  struct Lag {
    Index order;
    MoranResult moran;
  };
  std::vector<Lag> lags;
};

/// Moran's I for lag orders 1..max_lag using graph-distance bands of `base` contiguity.
SpatialAcf spatial_acf(const Vector& x, const SparseWeights& base, Index max_lag);

/// Lattice version: uses build_queen_lag(d, k).
SpatialAcf spatial_acf(const Vector& x, Index lattice_side, Index max_lag);

struct DiagnosticRow {
  /// "xi", "xi^2", "eps" or "eps^2".
  std::string series;
  MoranResult moran;
};

/// Moran statistics of the fit's residual series: xi and xi^2 always, plus eps and eps^2
/// for models with spARCH disturbances.
std::vector<DiagnosticRow> residual_diagnostics(const FitResult& fit, const SparseWeights& w_diag);

}  // namespace sparch
