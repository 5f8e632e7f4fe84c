#include "fit_detail.hpp"
#include "sparch/errors.hpp"
#include "sparch/likelihood.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log det(I - sum lambda_k B_k) over a fixed sparsity pattern, analyzed once.
class SarLogDet {
 public:
  explicit SarLogDet(const std::vector<SparseWeights>& lag_weights) {
    const Index n = lag_weights.empty() ? 0 : lag_weights.front().size();
    using Triplet = Eigen::Triplet<double, Index>;
    std::vector<Triplet> pattern;
    for (Index i = 0; i < n; ++i) pattern.emplace_back(i, i, 1.0);
    for (const auto& b : lag_weights) {
      for (Index i = 0; i < n; ++i) {
        for (SparseMatrix::InnerIterator it(b.matrix(), i); it; ++it) pattern.emplace_back(i, it.col(), 1.0);
      }
    }
    system_.resize(n, n);
    system_.setFromTriplets(pattern.begin(), pattern.end());
    system_.makeCompressed();
    const auto position = [&](Index row, Index col) {
      const Index* base = system_.innerIndexPtr();
      const Index* begin = base + system_.outerIndexPtr()[col];
      const Index* end = base + system_.outerIndexPtr()[col + 1];
      return static_cast<Index>(std::lower_bound(begin, end, row) - base);
    };
    for (Index i = 0; i < n; ++i) diagonal_.push_back(position(i, i));
    for (std::size_t k = 0; k < lag_weights.size(); ++k) {
      for (Index i = 0; i < n; ++i) {
        for (SparseMatrix::InnerIterator it(lag_weights[k].matrix(), i); it; ++it) {
          terms_.push_back({position(i, it.col()), k, it.value()});
        }
      }
    }
    if (n > 0) lu_.analyzePattern(system_);
  }

  // -inf outside the region where the determinant is positive.
  double operator()(const std::vector<double>& lambda) {
    for (const auto& [key, value] : cache_) {
      if (key == lambda) return value;
    }
    const double value = evaluate(lambda);
    if (cache_.size() >= 16) cache_.erase(cache_.begin());
    cache_.emplace_back(lambda, value);
    return value;
  }

 private:
  struct Term {
    Index position;
    std::size_t lag;
    double weight;
  };

  double evaluate(const std::vector<double>& lambda) {
    if (system_.rows() == 0) return 0.0;
    double* values = system_.valuePtr();
    std::fill(values, values + system_.nonZeros(), 0.0);
    for (Index pos : diagonal_) values[pos] = 1.0;
    for (const auto& t : terms_) values[t.position] -= lambda[t.lag] * t.weight;
    lu_.factorize(system_);
    if (lu_.info() != Eigen::Success) return -kInf;
    if (lu_.signDeterminant() <= 0.0) return -kInf;
    return lu_.logAbsDeterminant();
  }

  ColSparseMatrix system_;
  std::vector<Index> diagonal_;
  std::vector<Term> terms_;
  Eigen::SparseLU<ColSparseMatrix, Eigen::COLAMDOrdering<Index>> lu_;
  std::vector<std::pair<std::vector<double>, double>> cache_;
};

Vector least_squares(const Matrix& a, const Vector& b) { return a.colPivHouseholderQr().solve(b); }

}  // namespace

TwoStageResult two_stage_least_squares(const Vector& y, const Matrix& x, const std::vector<SparseWeights>& lag_weights) {
  const Index n = y.size();
  const Index m = x.cols();
  const Index k = static_cast<Index>(lag_weights.size());
  TwoStageResult out;
  Matrix z(n, m + k);
  z.leftCols(m) = x;
  for (Index l = 0; l < k; ++l) z.col(m + l) = lag_weights[static_cast<std::size_t>(l)].matrix() * y;

  // The constant column maps to row sums under B_k, so only non-constant covariates are lagged.
  std::vector<Vector> columns;
  for (Index c = 0; c < m; ++c) columns.emplace_back(x.col(c));
  for (const auto& b : lag_weights) {
    for (Index c = 1; c < m; ++c) columns.emplace_back(b.matrix() * x.col(c));
  }
  for (const auto& b : lag_weights) {
    for (const auto& b2 : lag_weights) {
      for (Index c = 1; c < m; ++c) columns.emplace_back(b.matrix() * (b2.matrix() * x.col(c)));
    }
  }
  Matrix instruments(n, static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) instruments.col(static_cast<Index>(c)) = columns[c];

  Eigen::ColPivHouseholderQR<Matrix> qr_h(instruments);
  const Matrix z_hat = instruments * qr_h.solve(z);
  Eigen::ColPivHouseholderQR<Matrix> qr_z(z_hat);
  if (qr_z.rank() < z.cols()) throw DegenerateInput("instruments do not identify the SAR coefficients");
  const Vector delta = qr_z.solve(y);
  out.beta = delta.head(m);
  for (Index l = 0; l < k; ++l) out.lambda.push_back(delta(m + l));
  out.residuals = y - z * delta;
  return out;
}

FitResult fit_sar_sparch(const Vector& y, const Matrix& x, const std::vector<SparseWeights>& lag_weights,
                         const SparseWeights& w_tilde, const FitConfig& config) {
  config.validate();
  const Index n = y.size();
  const Index m = x.cols();
  const std::size_t k_lags = lag_weights.size();
  if (x.rows() != n) throw InvalidModel("X must have one row per observation");
  if (m < 1) throw InvalidModel("X needs at least the intercept column");
  if (w_tilde.size() != n) throw InvalidModel("W~ must be n x n");
  for (const auto& b : lag_weights) {
    if (b.size() != n) throw InvalidModel("SAR weight matrices must be n x n");
  }
  if (config.fixed_lambda && config.fixed_lambda->size() != k_lags) {
    throw ConfigError("fixed_lambda needs one value per SAR weight matrix");
  }
  if (config.initial_lambda && config.initial_lambda->size() != k_lags) {
    throw ConfigError("initial_lambda needs one value per SAR weight matrix");
  }
  const bool triangular = config.parameterization == Parameterization::triangular;
  if (triangular && !w_tilde.triangular()) {
    throw InvalidWeights("triangular parameterization requested but W~ has no triangular ordering");
  }
  const bool estimate_lambda = !config.fixed_lambda.has_value();
  const bool estimate_rho = !config.fixed_rho.has_value();
  const bool plain_sar = config.fixed_rho && *config.fixed_rho == 0.0;
  const double nd = static_cast<double>(n);

  std::vector<Vector> lagged_y;
  for (const auto& b : lag_weights) lagged_y.emplace_back(b.matrix() * y);
  SarLogDet logdet(lag_weights);

  // theta = [beta (m), lambda (K if estimated), log alpha, rho (if estimated)]
  const Index k_free = estimate_lambda ? static_cast<Index>(k_lags) : 0;
  const Index i_alpha = m + k_free;
  const Index p = i_alpha + 1 + (estimate_rho ? 1 : 0);

  struct Point {
    Vector beta;
    std::vector<double> lambda;
    double alpha;
    double rho;
  };
  const auto unpack = [&](const Vector& theta) {
    Point pt;
    pt.beta = theta.head(m);
    pt.lambda = estimate_lambda ? std::vector<double>(theta.data() + m, theta.data() + m + k_free) : *config.fixed_lambda;
    pt.alpha = std::exp(theta(i_alpha));
    pt.rho = estimate_rho ? theta(i_alpha + 1) : *config.fixed_rho;
    return pt;
  };
  const auto residual = [&](const Point& pt) {
    Vector xi = y - x * pt.beta;
    for (std::size_t l = 0; l < k_lags; ++l) xi -= pt.lambda[l] * lagged_y[l];
    return xi;
  };
  const auto xi_loglik = [&](const Vector& xi, double alpha, double rho) {
    return triangular ? loglik_triangular(xi, alpha, rho, w_tilde, config.error)
                      : loglik_general(xi, alpha, rho, w_tilde, config.error);
  };
  const auto joint_loglik = [&](const Point& pt) {
    const double ld = logdet(pt.lambda);
    if (!std::isfinite(ld)) return -kInf;
    try {
      return ld + xi_loglik(residual(pt), pt.alpha, pt.rho);
    } catch (const NumericalError&) {
      return -kInf;
    }
  };
  const auto value = [&](const Vector& theta) {
    const double ll = joint_loglik(unpack(theta));
    return std::isfinite(ll) ? -ll / nd : kInf;
  };
  const Objective objective = [&](const Vector& theta, Vector* grad) {
    const double v = value(theta);
    if (grad == nullptr || !std::isfinite(v)) return v;
    if (!triangular) {
      *grad = numeric_gradient(value, theta);
      return v;
    }
    const Point pt = unpack(theta);
    const Vector xi = residual(pt);
    const Vector lags = w_tilde.matrix() * xi.array().square().matrix();
    Vector g_h(n);
    Vector g_xi(n);
    for (Index i = 0; i < n; ++i) {
      const double h = pt.alpha + pt.rho * lags(i);
      const double u = xi(i) / std::sqrt(h);
      const double f = config.error.score_ratio(u);
      g_h(i) = -0.5 * (f * u + 1.0) / h;
      g_xi(i) = f / std::sqrt(h);
    }
    g_xi += 2.0 * pt.rho * xi.cwiseProduct(w_tilde.matrix().transpose() * g_h);

    Vector g(p);
    g.head(m) = -(x.transpose() * g_xi);
    for (Index l = 0; l < k_free; ++l) {
      std::vector<double> up = pt.lambda;
      std::vector<double> down = pt.lambda;
      const double step = 1e-6 * std::max(1.0, std::abs(pt.lambda[static_cast<std::size_t>(l)]));
      up[static_cast<std::size_t>(l)] += step;
      down[static_cast<std::size_t>(l)] -= step;
      const double d_logdet = (logdet(up) - logdet(down)) / (2.0 * step);
      g(m + l) = d_logdet - lagged_y[static_cast<std::size_t>(l)].dot(g_xi);
    }
    g(i_alpha) = pt.alpha * g_h.sum();
    if (estimate_rho) g(i_alpha + 1) = lags.dot(g_h);
    *grad = -g / nd;
    if (!grad->allFinite()) *grad = numeric_gradient(value, theta);
    return v;
  };

  // Starting values.
  Vector beta0;
  std::vector<double> lambda0;
  if (config.fixed_lambda || config.initial_lambda) {
    lambda0 = config.fixed_lambda ? *config.fixed_lambda : *config.initial_lambda;
  } else if (k_lags > 0) {
    try {
      lambda0 = two_stage_least_squares(y, x, lag_weights).lambda;
      if (!std::isfinite(logdet(lambda0))) lambda0.assign(k_lags, 0.0);
    } catch (const NumericalError&) {
      lambda0.assign(k_lags, 0.0);
    }
  }
  Vector filtered = y;
  for (std::size_t l = 0; l < k_lags; ++l) filtered -= lambda0[l] * lagged_y[l];
  beta0 = least_squares(x, filtered);
  const Vector resid0 = filtered - x * beta0;

  Vector theta0(p);
  theta0.head(m) = beta0;
  for (Index l = 0; l < k_free; ++l) theta0(m + l) = lambda0[static_cast<std::size_t>(l)];
  theta0(i_alpha) = std::log(config.initial_alpha.value_or(detail::starting_variance(resid0)));
  if (estimate_rho) theta0(i_alpha + 1) = config.initial_rho.value_or(0.1);
  Vector lower = Vector::Constant(p, -kInf);
  if (estimate_rho) lower(i_alpha + 1) = 0.0;

  OptimizeOptions options;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;
  const OptimizeResult opt = minimize_bfgs(objective, theta0, lower, options);
  const Point best = unpack(opt.x);

  FitResult fit;
  fit.model = plain_sar ? "SAR" : (k_lags == 0 ? "spARCH" : "SARspARCH");
  Vector natural(p);
  for (Index c = 0; c < m; ++c) {
    fit.names.push_back("beta_" + std::to_string(c));
    natural(c) = best.beta(c);
  }
  for (Index l = 0; l < k_free; ++l) {
    fit.names.push_back("lambda_" + std::to_string(l + 1));
    natural(m + l) = best.lambda[static_cast<std::size_t>(l)];
  }
  fit.names.emplace_back(plain_sar ? "sigma2" : "alpha");
  natural(i_alpha) = best.alpha;
  if (estimate_rho) {
    fit.names.emplace_back("rho");
    natural(i_alpha + 1) = best.rho;
  }
  fit.estimates = natural;
  fit.loglik = -opt.value * nd;
  fit.parameters = static_cast<int>(p);
  fit.aic = aic(fit);
  fit.converged = opt.converged && std::isfinite(opt.value);
  fit.iterations = opt.iterations;
  fit.rho_at_boundary = estimate_rho && best.rho <= 1e-10;
  for (double v : opt.trace) fit.loglik_trace.push_back(-v * nd);

  const auto negll = [&](const Vector& nat) {
    Vector theta = nat;
    if (!(nat(i_alpha) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    theta(i_alpha) = std::log(nat(i_alpha));
    const double ll = joint_loglik(unpack(theta));
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::quiet_NaN();
  };
  detail::attach_information(fit, numeric_hessian(negll, natural));

  fit.xi = residual(best);
  fit.h = conditional_variance(fit.xi, best.alpha, best.rho, w_tilde);
  fit.eps = fit.xi.array() / fit.h.array().sqrt();
  return fit;
}

FitResult fit_sar(const Vector& y, const Matrix& x, const std::vector<SparseWeights>& lag_weights,
                  const FitConfig& config) {
  FitConfig sar = config;
  sar.fixed_rho = 0.0;
  sar.error = ErrorSpec::gaussian();
  sar.parameterization = Parameterization::triangular;
  return fit_sar_sparch(y, x, lag_weights, SparseWeights(y.size()), sar);
}

}  // namespace sparch
