#include "sparch/likelihood.hpp"

#include "fit_detail.hpp"
#include "sparch/errors.hpp"
#include "sparch/linalg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sparch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_size(const Vector& y, const SparseWeights& w) {
  if (y.size() != w.size()) {
    throw InvalidModel("data has " + std::to_string(y.size()) + " sites but W is " + std::to_string(w.size()) +
                       "x" + std::to_string(w.size()));
  }
}

void require_positive(const Vector& h) {
  for (Index i = 0; i < h.size(); ++i) {
    if (!(h(i) > 0.0)) {
      throw InvalidParameter("h[" + std::to_string(i) + "] = " + std::to_string(h(i)) + " is not positive");
    }
  }
}

double innovation_loglik(const Vector& y, const Vector& h, const ErrorSpec& error) {
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) total += error.log_density(y(i) / std::sqrt(h(i)));
  return total;
}

// log|det J| for J = d(y_i / sqrt(h_i)) / dy with h = alpha + W (y o y).
double log_jacobian(const Vector& y, const Vector& h, const SparseWeights& w) {
  const Index n = y.size();
  const SparseMatrix& m = w.matrix();
  using Triplet = Eigen::Triplet<double, Index>;
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(n + m.nonZeros()));
  const bool factored = (y.array() != 0.0).all();
  double offset = 0.0;
  if (factored) {
    // J' = diag(y h^-3/2) (diag(h / y^2) - W)' diag(y) up to transposition.
    for (Index i = 0; i < n; ++i) {
      triplets.emplace_back(i, i, h(i) / (y(i) * y(i)));
      offset += 2.0 * std::log(std::abs(y(i))) - 1.5 * std::log(h(i));
    }
    for (Index i = 0; i < n; ++i) {
      for (SparseMatrix::InnerIterator it(m, i); it; ++it) triplets.emplace_back(i, it.col(), -it.value());
    }
  } else {
    for (Index i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0 / std::sqrt(h(i)));
    for (Index i = 0; i < n; ++i) {
      const double scale = y(i) / (h(i) * std::sqrt(h(i)));
      for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
        triplets.emplace_back(i, it.col(), -scale * it.value() * y(it.col()));
      }
    }
  }
  ColSparseMatrix jac(n, n);
  jac.setFromTriplets(triplets.begin(), triplets.end());
  try {
    return offset + sparse_log_determinant(jac).log_abs;
  } catch (const SingularSystem&) {
    throw InvalidParameter("the Jacobian of the transformation is singular at this point");
  }
}

}  // namespace

Parameterization parse_parameterization(std::string_view name) {
  if (name == "triangular") return Parameterization::triangular;
  if (name == "general") return Parameterization::general;
  throw ConfigError("parameterization must be 'triangular' or 'general', got '" + std::string(name) + "'");
}

std::string_view to_string(Parameterization p) {
  return p == Parameterization::triangular ? "triangular" : "general";
}

Vector conditional_variance(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde) {
  require_same_size(y, w_tilde);
  return (rho * (w_tilde.matrix() * y.array().square().matrix())).array() + alpha;
}

double loglik_triangular(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde,
                         const ErrorSpec& error) {
  if (!w_tilde.triangular()) throw InvalidWeights("loglik_triangular needs a (permuted) strictly triangular W");
  const Vector h = conditional_variance(y, alpha, rho, w_tilde);
  require_positive(h);
  return innovation_loglik(y, h, error) - 0.5 * h.array().log().sum();
}

double loglik_general(const Vector& y, const SpArchModel& model) {
  require_same_size(y, model.weights());
  const Vector h = model.alpha() + model.weights().matrix() * y.array().square().matrix();
  require_positive(h);
  const double core = innovation_loglik(y, h, model.error());
  if (!std::isfinite(core)) return core;
  return core + log_jacobian(y, h, model.weights());
}

double loglik_general(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde,
                      const ErrorSpec& error) {
  if (!(alpha > 0.0)) throw InvalidParameter("alpha must be positive");
  if (rho < 0.0) throw InvalidParameter("rho must be nonnegative");
  return loglik_general(y, SpArchModel::homogeneous(alpha, w_tilde.scaled(rho), error));
}

Eigen::Vector2d score_triangular(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde,
                                 const ErrorSpec& error) {
  if (!w_tilde.triangular()) throw InvalidWeights("score_triangular needs a (permuted) strictly triangular W");
  require_same_size(y, w_tilde);
  const Vector lags = w_tilde.matrix() * y.array().square().matrix();
  Eigen::Vector2d score = Eigen::Vector2d::Zero();
  for (Index i = 0; i < y.size(); ++i) {
    const double h = alpha + rho * lags(i);
    if (!(h > 0.0)) throw InvalidParameter("h[" + std::to_string(i) + "] is not positive");
    const double u = y(i) / std::sqrt(h);
    const double dh = -0.5 * (error.score_ratio(u) * u + 1.0) / h;
    score(0) += dh;
    score(1) += lags(i) * dh;
  }
  return score;
}

Eigen::Matrix2d information_matrix(const Vector& y, double alpha, double rho, const SparseWeights& w_tilde) {
  require_same_size(y, w_tilde);
  const Vector lags = w_tilde.matrix() * y.array().square().matrix();
  Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
  for (Index i = 0; i < y.size(); ++i) {
    const double h = alpha + rho * lags(i);
    if (!(h > 0.0)) throw InvalidParameter("h[" + std::to_string(i) + "] is not positive");
    const double c = y(i) * y(i) / (h * h * h) - 0.5 / (h * h);
    info(0, 0) += c;
    info(0, 1) += c * lags(i);
    info(1, 1) += c * lags(i) * lags(i);
  }
  info(1, 0) = info(0, 1);
  return info;
}

void FitConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (!(gradient_tolerance > 0.0)) throw ConfigError("gradient_tolerance must be positive");
  if (initial_alpha && !(*initial_alpha > 0.0)) throw ConfigError("initial_alpha must be positive");
  if (initial_rho && !(*initial_rho >= 0.0)) throw ConfigError("initial_rho must be nonnegative");
  if (fixed_rho && !(*fixed_rho >= 0.0)) throw ConfigError("fixed_rho must be nonnegative");
}

double FitResult::estimate(std::string_view name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return estimates(static_cast<Index>(k));
  }
  throw std::out_of_range("no parameter named " + std::string(name));
}

double FitResult::standard_error(std::string_view name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return standard_errors(static_cast<Index>(k));
  }
  throw std::out_of_range("no parameter named " + std::string(name));
}

double aic(double loglik, int parameters) { return 2.0 * parameters - 2.0 * loglik; }
double aic(const FitResult& fit) { return aic(fit.loglik, fit.parameters); }

namespace detail {

void attach_information(FitResult& fit, Matrix information) {
  const Index p = information.rows();
  fit.standard_errors = Vector::Constant(p, std::numeric_limits<double>::quiet_NaN());
  fit.information_positive_definite = false;
  if (information.allFinite()) {
    Eigen::LLT<Matrix> llt(information);
    if (llt.info() == Eigen::Success) {
      const Matrix cov = llt.solve(Matrix::Identity(p, p));
      if ((cov.diagonal().array() > 0.0).all()) {
        fit.standard_errors = cov.diagonal().cwiseSqrt();
        fit.information_positive_definite = true;
      }
    }
  }
  fit.information = std::move(information);
}

double starting_variance(const Vector& v) {
  if (v.size() < 2) return 1.0;
  const double var = (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
  return std::isfinite(var) ? std::max(var, 1e-8) : 1.0;
}

}  // namespace detail

FitResult fit_ml(const Vector& y, const SparseWeights& w_tilde, const FitConfig& config) {
  config.validate();
  require_same_size(y, w_tilde);
  const bool triangular = config.parameterization == Parameterization::triangular;
  if (triangular && !w_tilde.triangular()) {
    throw InvalidWeights("triangular parameterization requested but W~ has no triangular ordering");
  }
  const double n = static_cast<double>(y.size());
  const bool estimate_rho = !config.fixed_rho.has_value();

  const auto loglik = [&](double alpha, double rho) {
    return triangular ? loglik_triangular(y, alpha, rho, w_tilde, config.error)
                      : loglik_general(y, alpha, rho, w_tilde, config.error);
  };
  const auto unpack = [&](const Vector& theta) {
    return std::pair{std::exp(theta(0)), estimate_rho ? theta(1) : *config.fixed_rho};
  };
  const auto value = [&](const Vector& theta) {
    const auto [alpha, rho] = unpack(theta);
    try {
      const double ll = loglik(alpha, rho);
      return std::isfinite(ll) ? -ll / n : kInf;
    } catch (const NumericalError&) {
      return kInf;
    }
  };
  const Objective objective = [&](const Vector& theta, Vector* grad) {
    const double v = value(theta);
    if (grad != nullptr && std::isfinite(v)) {
      if (triangular) {
        const auto [alpha, rho] = unpack(theta);
        const Eigen::Vector2d s = score_triangular(y, alpha, rho, w_tilde, config.error);
        grad->resize(theta.size());
        (*grad)(0) = -alpha * s(0) / n;
        if (estimate_rho) (*grad)(1) = -s(1) / n;
      } else {
        *grad = numeric_gradient(value, theta);
      }
    }
    return v;
  };

  const Index p = estimate_rho ? 2 : 1;
  Vector theta0(p);
  theta0(0) = std::log(config.initial_alpha.value_or(detail::starting_variance(y)));
  if (estimate_rho) theta0(1) = config.initial_rho.value_or(0.1);
  Vector lower = Vector::Constant(p, -kInf);
  if (estimate_rho) lower(1) = 0.0;

  OptimizeOptions options;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;
  const OptimizeResult opt = minimize_bfgs(objective, theta0, lower, options);

  FitResult fit;
  fit.model = "spARCH";
  const auto [alpha, rho] = unpack(opt.x);
  fit.names = {"alpha"};
  fit.estimates = Vector(p);
  fit.estimates(0) = alpha;
  if (estimate_rho) {
    fit.names.emplace_back("rho");
    fit.estimates(1) = rho;
  }
  fit.loglik = -opt.value * n;
  fit.parameters = static_cast<int>(p);
  fit.aic = aic(fit);
  fit.converged = opt.converged && std::isfinite(opt.value);
  fit.iterations = opt.iterations;
  fit.rho_at_boundary = estimate_rho && rho <= 1e-10;
  for (double v : opt.trace) fit.loglik_trace.push_back(-v * n);

  Matrix info;
  if (triangular && config.error.kind() == ErrorSpec::Kind::gaussian) {
    info = information_matrix(y, alpha, rho, w_tilde).topLeftCorner(p, p);
  } else {
    const auto negll = [&](const Vector& natural) {
      try {
        return -loglik(natural(0), estimate_rho ? natural(1) : rho);
      } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    info = numeric_hessian(negll, fit.estimates);
  }
  detail::attach_information(fit, std::move(info));

  fit.xi = y;
  if (std::isfinite(opt.value)) {
    fit.h = conditional_variance(y, alpha, rho, w_tilde);
    fit.eps = y.array() / fit.h.array().sqrt();
  }
  return fit;
}

}  // namespace sparch
