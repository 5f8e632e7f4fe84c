#pragma once

#include "sparch/diagnostics.hpp"
#include "sparch/likelihood.hpp"
#include "sparch/process.hpp"
#include "sparch/weights.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sparch {

/// Shortest text that round-trips the double exactly (printf "%.17g"); "nan", "inf", "-inf".
std::string format_double(double value);

/// Header `i,j,w`, 0-based indices, entries sorted by (i, j).
void write_weights_csv(std::ostream& out, const SparseWeights& w);

/// Reads a triplet CSV. The matrix is n x n; with n = 0 it is inferred from the largest index.
SparseWeights read_weights_csv(std::istream& in, Index n = 0);

/// A CSV file with a header row and numeric columns.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  [[nodiscard]] Index rows() const { return columns.empty() ? 0 : static_cast<Index>(columns.front().size()); }
  [[nodiscard]] bool has(std::string_view name) const;
  /// Throws ConfigError naming the missing column.
  [[nodiscard]] Vector column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);

/// Columns site_index,y,h,eps.
void write_realization_csv(std::ostream& out, const Realization& r);

/// Columns site_index,y,h,eps,xi,x1..x{m-1} (covariates after the intercept).
void write_sar_realization_csv(std::ostream& out, const SarRealization& r, const Matrix& covariates);

struct MoranRow {
  std::string series;
  Index lag = 1;
  MoranResult moran;
};

/// Columns series,lag,I,expectation,std,z,p.
void write_moran_csv(std::ostream& out, const std::vector<MoranRow>& rows);

/// Estimates, standard errors, log-likelihood, AIC, convergence and the information matrix.
nlohmann::json fit_to_json(const FitResult& fit);

/// Columns site_index,xi,eps,h.
void write_residuals_csv(std::ostream& out, const FitResult& fit);

}  // namespace sparch
