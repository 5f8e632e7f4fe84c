#pragma once

#include "sparch/error_spec.hpp"
#include "sparch/optimize.hpp"
#include "sparch/process.hpp"
#include "sparch/types.hpp"
#include "sparch/weights.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sparch {

enum class Parameterization { triangular, general };

Parameterization parse_parameterization(std::string_view name);
std::string_view to_string(Parameterization p);

/// h = alpha + rho W~ (y o y).
Vector conditional_variance(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde);

/// Log density of y for a (permuted) strictly triangular W~: sum log f(y_i / sqrt h_i) - log h_i / 2.
/// Throws InvalidWeights if W~ is not triangular and InvalidParameter if some h_i <= 0.
double loglik_triangular(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde,
                         const ErrorSpec& error);

/// Exact log density of y for an arbitrary W by the change-of-variables rule. The Jacobian
/// determinant is factored through diag(h / y^2) - W when every y_i != 0 and is evaluated
/// directly otherwise. Throws InvalidParameter for h_i <= 0 or a singular Jacobian.
double loglik_general(const Vector& y, const SpArchModel& model);
double loglik_general(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde,
                      const ErrorSpec& error);

/// (d/d alpha, d/d rho) of loglik_triangular.
Eigen::Vector2d score_triangular(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde,
                                 const ErrorSpec& error);

/// Observed information (negative Hessian in (alpha, rho)) of the Gaussian triangular likelihood.
Eigen::Matrix2d information_matrix(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde);

struct FitConfig {
  Parameterization parameterization = Parameterization::triangular;
  int max_iterations = 200;
  double gradient_tolerance = 1e-7;
  std::optional<double> initial_alpha;
  std::optional<double> initial_rho;
  std::optional<std::vector<double>> initial_lambda;
  /// Holds rho at this value instead of estimating it.
  std::optional<double> fixed_rho;
  /// Holds the SAR coefficients at these values instead of estimating them.
  std::optional<std::vector<double>> fixed_lambda;
  ErrorSpec error = ErrorSpec::gaussian();

  /// Throws ConfigError on non-positive budgets or out-of-bounds initial values.
  void validate() const;
};

struct FitResult {
  /// "spARCH", "SARspARCH" or "SAR".
  std::string model;
  std::vector<std::string> names;
  Vector estimates;
  /// NaN entries when the information matrix is not positive definite.
  Vector standard_errors;
  bool information_positive_definite = false;
  Matrix information;
  double loglik = 0.0;
  double aic = 0.0;
  /// Number of estimated (non-fixed) parameters.
  int parameters = 0;
  /// Model disturbances xi (the data itself for a pure spARCH fit).
  Vector xi;
  /// Standardized residuals xi_i / sqrt(h_i).
  Vector eps;
  Vector h;
  bool converged = false;
  bool rho_at_boundary = false;
  int iterations = 0;
  /// Log-likelihood after every accepted optimizer step.
  std::vector<double> loglik_trace;

  /// Throws std::out_of_range for an unknown name.
  [[nodiscard]] double estimate(std::string_view name) const;
  [[nodiscard]] double standard_error(std::string_view name) const;
  [[nodiscard]] bool is_sparch_family() const { return model != "SAR"; }
};

/// 2k - 2 loglik.
double aic(const FitResult& fit);
double aic(double loglik, int parameters);

/// Maximum likelihood for h = alpha + rho W~ (y o y) with alpha > 0 and rho >= 0.
FitResult fit_ml(const Vector& y, const SparseWeights& w_tilde, const FitConfig& config = {});

/// Joint maximum likelihood of Y = X beta + (sum lambda_k B_k) Y + xi, xi ~ spARCH(alpha, rho W~):
/// log|det(I - sum lambda_k B_k)| plus the spARCH log density of the implied xi.
FitResult fit_sar_sparch(const Vector& y, const Matrix& x, const std::vector<SparseWeights>& lag_weights,
                         const SparseWeights& w_tilde, const FitConfig& config = {});

/// Gaussian SAR quasi-maximum likelihood: the rho = 0 restriction of fit_sar_sparch.
FitResult fit_sar(const Vector& y, const Matrix& x, const std::vector<SparseWeights>& lag_weights,
                  const FitConfig& config = {});

/// Two-stage least squares for (beta, lambda) with instruments [X, B_k X, B_k B_l X].
struct TwoStageResult {
  Vector beta;
  std::vector<double> lambda;
  Vector residuals;
};
TwoStageResult two_stage_least_squares(const Vector& y, const Matrix& x, const std::vector<SparseWeights>& lag_weights);

}  // namespace sparch
