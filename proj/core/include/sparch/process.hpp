#pragma once

#include "sparch/error_spec.hpp"
#include "sparch/types.hpp"
#include "sparch/weights.hpp"

#include <array>
#include <memory>
#include <string>

namespace sparch {

/// Values in [-kNonnegativityTolerance, 0) are treated as roundoff and clamped to zero.
inline constexpr double kNonnegativityTolerance = 1e-10;

enum class Certificate {
  triangular,       ///< W is (permutation-)strictly triangular: always well defined
  bounded_support,  ///< a^4 ||W^2||_1 < 1 for the innovation support [-a, a]
  unverified,       ///< no sufficient condition applies; draws are checked one by one
};

std::string_view to_string(Certificate certificate);

struct ValidityReport {
  bool alpha_nonnegative = true;
  bool weights_admissible = true;
  Certificate certificate = Certificate::unverified;
  /// (||W^2||_1)^(-1/4); +inf when W^2 = 0.
  double support_bound = 0.0;
  /// Half-width of the innovation support, when bounded.
  std::optional<double> innovation_support;
};

/// Throws InvalidModel for negative or mismatched alpha.
ValidityReport validate(const Vector& alpha, const SparseWeights& w, const ErrorSpec& error);

/// spARCH process Y = diag(h)^(1/2) eps with h = alpha + W (Y o Y).
class SpArchModel {
 public:
  SpArchModel(Vector alpha, SparseWeights weights, ErrorSpec error);
  static SpArchModel homogeneous(double alpha, SparseWeights weights, ErrorSpec error);

  [[nodiscard]] Index size() const noexcept { return alpha_.size(); }
  [[nodiscard]] const Vector& alpha() const noexcept { return alpha_; }
  [[nodiscard]] const SparseWeights& weights() const noexcept { return weights_; }
  [[nodiscard]] const ErrorSpec& error() const noexcept { return error_; }
  [[nodiscard]] const ValidityReport& validity() const noexcept { return validity_; }

 private:
  Vector alpha_;
  SparseWeights weights_;
  ErrorSpec error_;
  ValidityReport validity_;
};

ValidityReport validate(const SpArchModel& model);

struct Realization {
  Vector y;
  Vector y2;
  Vector h;
  Vector eps;
  Seed seed = 0;
};

/// diag(eps^2) W.
SparseMatrix build_A(const Vector& eps, const SparseWeights& w);

/// eta_i = alpha_i eps_i^2 + eps_i^2 sum_v w_iv eps_v^2 alpha_v.
Vector eta(const Vector& eps, const Vector& alpha, const SparseWeights& w);

struct Y2Solution {
  Vector y2;
  Vector h;
};

/**
 * Reusable solver for the unique squared observations Y2 implied by a draw eps, i.e. the
 * solution of (I - A^2) Y2 = eta. Triangular models use the forward recursion in causal
 * order. Otherwise the equivalent unsquared system (I - A) Y2 = diag(eps^2) alpha is solved
 * by Gauss-Seidel sweeps, checked by the residual. Draws where that stalls use a sparse LU
 * whose ordering and fill are computed once per model, and then a partial-pivoting sparse LU.
 *
 * Not thread-safe; use one instance per thread.
 */
class Y2Solver {
 public:
  explicit Y2Solver(const SpArchModel& model);
  Y2Solver(const Y2Solver&) = delete;
  Y2Solver& operator=(const Y2Solver&) = delete;
  Y2Solver(Y2Solver&&) noexcept;
  Y2Solver& operator=(Y2Solver&&) noexcept;
  ~Y2Solver();

  /// Throws SingularSystem or NonnegativityViolation.
  Y2Solution solve(const Vector& eps);

 private:
  Y2Solution solve_triangular(const Vector& eps) const;
  Y2Solution solve_general(const Vector& eps);

  struct General;
  Vector alpha_;
  SparseWeights weights_;
  std::unique_ptr<General> general_;
};

Y2Solution solve_y2(const Vector& eps, const SpArchModel& model);

/// Direct sparse-LU solve of the squared system (I - A^2) Y2 = eta (no pattern reuse).
Y2Solution solve_y2_squared(const Vector& eps, const SpArchModel& model);

/// Y2, h, and Y for a given innovation vector.
Realization realize(const SpArchModel& model, const Vector& eps, Seed seed = 0);

/// Draws eps with `seed` and solves. Deterministic given (model, seed).
Realization simulate(const SpArchModel& model, Seed seed);

/// Repeated simulation of one model with a reused solver.
class Simulator {
 public:
  explicit Simulator(const SpArchModel& model) : model_(model), solver_(model) {}
  Realization operator()(Seed seed);
  Realization operator()(const Vector& eps, Seed seed = 0);

 private:
  const SpArchModel& model_;
  Y2Solver solver_;
};

/// spGARCH conditional variance h = (I - W2)^(-1) (alpha + W1 Y2).
Vector spgarch_h(const Vector& y2, const Vector& alpha, const SparseWeights& w1, const SparseWeights& w2);

struct ClosedFormN2 {
  std::array<double, 2> y2{};
  /// eps_1^2 eps_2^2 < 1 / (w12 w21), with nonnegative alpha and weights.
  bool admissible = false;
};

/// Two-site closed form of Y(s_1)^2, Y(s_2)^2.
ClosedFormN2 closed_form_n2(std::array<double, 2> eps, std::array<double, 2> alpha, double w12, double w21);

/// Spatial autoregression with spARCH disturbances:
/// Y = X beta + (sum_k lambda_k B_k) Y + xi, xi ~ spARCH.
class SarSpArchModel {
 public:
  SarSpArchModel(Matrix covariates, Vector beta, std::vector<double> lambda,
                 std::vector<SparseWeights> lag_weights, SpArchModel noise);

  [[nodiscard]] Index size() const noexcept { return covariates_.rows(); }
  [[nodiscard]] const Matrix& covariates() const noexcept { return covariates_; }
  [[nodiscard]] const Vector& beta() const noexcept { return beta_; }
  [[nodiscard]] const std::vector<double>& lambda() const noexcept { return lambda_; }
  [[nodiscard]] const std::vector<SparseWeights>& lag_weights() const noexcept { return lag_weights_; }
  [[nodiscard]] const SpArchModel& noise() const noexcept { return noise_; }

  /// I - sum_k lambda_k B_k (identity when there are no SAR terms).
  [[nodiscard]] ColSparseMatrix sar_matrix() const;

 private:
  Matrix covariates_;
  Vector beta_;
  std::vector<double> lambda_;
  std::vector<SparseWeights> lag_weights_;
  SpArchModel noise_;
};

struct SarRealization {
  Vector y;
  /// The spARCH disturbance draw; noise.y is xi.
  Realization noise;
};

/// xi is simulated from the embedded spARCH model, then Y = S^(-1) (X beta + xi).
SarRealization simulate_sar_sparch(const SarSpArchModel& model, Seed seed);

/// Deterministic part: Y given a disturbance vector xi.
Vector sar_response(const SarSpArchModel& model, const Vector& xi);

}  // namespace sparch
