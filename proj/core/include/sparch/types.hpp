#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

namespace sparch {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Row-major storage keeps (i, j) iteration sorted, which makes every sum over entries
/// bit-reproducible.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Column-major form required by Eigen's sparse LU.
using ColSparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;

/// Site permutation: element k is the original index of the site at position k.
using Permutation = std::vector<Index>;

using Seed = std::uint64_t;

}  // namespace sparch
