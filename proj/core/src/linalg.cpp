#include "sparch/linalg.hpp"

#include "sparch/errors.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace sparch {

LogDeterminant sparse_log_determinant(const ColSparseMatrix& m) {
  Eigen::SparseLU<ColSparseMatrix, Eigen::COLAMDOrdering<Index>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw SingularSystem("sparse LU failed: " + lu.lastErrorMessage());
  LogDeterminant det;
  det.log_abs = lu.logAbsDeterminant();
  det.sign = lu.signDeterminant();
  if (!std::isfinite(det.log_abs)) throw SingularSystem("matrix is numerically singular");
  return det;
}

Vector sparse_solve(const ColSparseMatrix& m, const Vector& b) {
  Eigen::SparseLU<ColSparseMatrix, Eigen::COLAMDOrdering<Index>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw SingularSystem("sparse LU failed: " + lu.lastErrorMessage());
  Vector x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SingularSystem("sparse solve failed");
  return x;
}

ColSparseMatrix sar_operator(std::span<const double> lambda, std::span<const SparseWeights> lag_weights) {
  if (lambda.size() != lag_weights.size()) {
    throw InvalidModel("need one SAR coefficient per SAR weight matrix");
  }
  if (lag_weights.empty()) throw InvalidModel("SAR operator needs at least one weight matrix");
  const Index n = lag_weights.front().size();
  SparseMatrix sum(n, n);
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (lag_weights[k].size() != n) throw InvalidModel("SAR weight matrices differ in size");
    sum += lambda[k] * lag_weights[k].matrix();
  }
  return identity_minus(sum);
}

ColSparseMatrix identity_minus(const SparseMatrix& m) {
  ColSparseMatrix identity(m.rows(), m.cols());
  identity.setIdentity();
  ColSparseMatrix out = identity - ColSparseMatrix(m);
  out.makeCompressed();
  return out;
}

}  // namespace sparch
