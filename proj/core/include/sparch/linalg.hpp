#pragma once

#include "sparch/types.hpp"
#include "sparch/weights.hpp"

#include <span>

namespace sparch {

/// Sign and log-magnitude of a determinant.
struct LogDeterminant {
  double log_abs = 0.0;
  double sign = 1.0;
};

/// Sparse LU determinant. Throws SingularSystem when the factorization fails.
LogDeterminant sparse_log_determinant(const ColSparseMatrix& m);

/// Solves m x = b by sparse LU. Throws SingularSystem on failure.
Vector sparse_solve(const ColSparseMatrix& m, const Vector& b);

/// I - sum_k lambda_k B_k.
ColSparseMatrix sar_operator(std::span<const double> lambda, std::span<const SparseWeights> lag_weights);

ColSparseMatrix identity_minus(const SparseMatrix& m);

}  // namespace sparch
