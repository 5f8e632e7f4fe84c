#include "oracles.hpp"

#include "sparch/errors.hpp"
#include "sparch/likelihood.hpp"
#include "sparch/optimize.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace sparch {
namespace {

using testing::dense;
using testing::Rng64;

double log_phi(double x) { return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi); }

SparseWeights pair(double w12, double w21) {
  std::vector<SparseWeights::Entry> e;
  if (w12 > 0) e.push_back({0, 1, w12});
  if (w21 > 0) e.push_back({1, 0, w21});
  return SparseWeights::from_entries(2, e);
}

Vector random_y(Rng64& rng, Index n, double scale = 1.5) {
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = scale * testing::standard_normal(rng);
  return y;
}

// Sum log f(eps) + log|det d eps / dy| with a dense Jacobian and eigenvalues.
double loglik_oracle(const Vector& y, const Vector& alpha, const Matrix& w) {
  const Index n = y.size();
  const Vector h = alpha + w * y.array().square().matrix();
  Matrix jac = Matrix::Zero(n, n);
  double core = 0.0;
  for (Index i = 0; i < n; ++i) {
    core += log_phi(y(i) / std::sqrt(h(i)));
    jac(i, i) = 1.0 / std::sqrt(h(i));
    for (Index j = 0; j < n; ++j) jac(i, j) -= y(i) * y(j) * w(i, j) / std::pow(h(i), 1.5);
  }
  return core + testing::logdet_eigen(jac);
}

TEST(Loglik, SingleSite) {
  Vector y(1);
  y << 0.7;
  const double want = log_phi(0.7 / std::sqrt(2.0)) - 0.5 * std::log(2.0);
  EXPECT_NEAR(loglik_triangular(y, 2.0, 0.3, SparseWeights(1), ErrorSpec::gaussian()), want, 1e-15);
  EXPECT_NEAR(loglik_general(y, 2.0, 0.3, SparseWeights(1), ErrorSpec::gaussian()), want, 1e-15);
}

TEST(Loglik, ChainByHand) {
  const std::vector<SparseWeights::Entry> e{{1, 0, 0.5}, {2, 1, 0.5}};
  const SparseWeights w = SparseWeights::from_entries(3, e);
  Vector y(3);
  y << 1.0, std::sqrt(1.5), std::sqrt(1.75);
  const Vector h = conditional_variance(y, 1.0, 1.0, w);
  EXPECT_DOUBLE_EQ(h(1), 1.5);
  EXPECT_DOUBLE_EQ(h(2), 1.75);
  const double want = 3.0 * log_phi(1.0) - 0.5 * (std::log(1.5) + std::log(1.75));
  EXPECT_NEAR(loglik_triangular(y, 1.0, 1.0, w, ErrorSpec::gaussian()), want, 1e-14);
  EXPECT_NEAR(loglik_general(y, 1.0, 1.0, w, ErrorSpec::gaussian()), want, 1e-12);
}

TEST(Loglik, WhiteNoiseIsIidNormal) {
  Rng64 rng(10);
  const Vector y = random_y(rng, 25, 1.0);
  double want = 0.0;
  for (Index i = 0; i < y.size(); ++i) want += log_phi(y(i));
  EXPECT_NEAR(loglik_triangular(y, 1.0, 0.0, testing::random_triangular_weights(rng, 25, 0.3, false),
                                ErrorSpec::gaussian()),
              want, 1e-12);
  Vector zero(1);
  zero << 0.0;
  EXPECT_NEAR(loglik_general(zero, 2.0, 0.0, SparseWeights(1), ErrorSpec::gaussian()), log_phi(0.0) - 0.5 * std::log(2.0),
              1e-15);
}

TEST(Loglik, TwoSitesMatchHandDensity) {
  const auto phi = [](double x) { return std::exp(log_phi(x)); };
  Rng64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const double a1 = testing::uniform(rng, 0.2, 3.0), a2 = testing::uniform(rng, 0.2, 3.0);
    const double w12 = testing::uniform(rng, 0.0, 0.8), w21 = testing::uniform(rng, 0.05, 0.8);
    const double y1 = testing::uniform(rng, -2.0, 2.0), y2 = testing::uniform(rng, -2.0, 2.0);
    Vector alpha(2), y(2);
    alpha << a1, a2;
    y << y1, y2;
    const SpArchModel m(alpha, pair(w12, w21), ErrorSpec::gaussian());
    const double want = std::log(testing::density_n2(y1, y2, a1, a2, w12, w21, phi));
    EXPECT_NEAR(loglik_general(y, m), want, 1e-10 * std::max(1.0, std::abs(want)));
  }
}

TEST(Loglik, TriangularEqualsGeneral) {
  Rng64 rng(12);
  for (int rep = 0; rep < 40; ++rep) {
    const Index n = testing::uniform_index(rng, 1, 50);
    const SparseWeights w = testing::random_triangular_weights(rng, n, 0.2, true);
    const double alpha = testing::uniform(rng, 0.2, 3.0), rho = testing::uniform(rng, 0.0, 1.5);
    const Vector y = random_y(rng, n);
    const double tri = loglik_triangular(y, alpha, rho, w, ErrorSpec::gaussian());
    const double gen = loglik_general(y, alpha, rho, w, ErrorSpec::gaussian());
    EXPECT_NEAR(tri, gen, 1e-10) << "n=" << n;
  }
}

TEST(Loglik, GeneralMatchesDenseJacobian) {
  Rng64 rng(13);
  for (int rep = 0; rep < 40; ++rep) {
    const Index n = testing::uniform_index(rng, 2, 30);
    const SparseWeights w = testing::random_weights(rng, n, 0.25, 0.4);
    Vector alpha(n);
    for (Index i = 0; i < n; ++i) alpha(i) = testing::uniform(rng, 0.3, 2.0);
    Vector y = random_y(rng, n);
    if (rep % 4 == 0) y(0) = 0.0;
    const double got = loglik_general(y, SpArchModel(alpha, w, ErrorSpec::gaussian()));
    const double want = loglik_oracle(y, alpha, dense(w));
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::abs(want))) << "rep " << rep;
  }
}

TEST(Loglik, ZeroObservationsUseDirectJacobian) {
  Rng64 rng(14);
  const SparseWeights w = testing::random_triangular_weights(rng, 20, 0.3, true);
  Vector y = random_y(rng, 20);
  y(3) = 0.0;
  y(11) = 0.0;
  EXPECT_NEAR(loglik_general(y, 1.0, 0.4, w, ErrorSpec::gaussian()),
              loglik_triangular(y, 1.0, 0.4, w, ErrorSpec::gaussian()), 1e-10);
}

TEST(Loglik, PermutationInvariant) {
  Rng64 rng(15);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = testing::uniform_index(rng, 2, 40);
    const SparseWeights w = testing::random_weights(rng, n, 0.2, 0.3);
    const Vector y = random_y(rng, n);
    const auto perm = testing::random_permutation(rng, n);
    const double a = loglik_general(y, 1.3, 0.7, w, ErrorSpec::gaussian());
    const double b = loglik_general(testing::permute(y, perm), 1.3, 0.7, testing::permute(w, perm), ErrorSpec::gaussian());
    EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a)));
  }
}

TEST(Loglik, RejectsNonTriangularAndNonPositiveVariance) {
  const Vector y = Vector::Ones(2);
  EXPECT_THROW(loglik_triangular(y, 1.0, 0.5, pair(0.5, 0.5), ErrorSpec::gaussian()), InvalidWeights);
  EXPECT_THROW(loglik_triangular(y, -1.0, 0.0, pair(0.0, 0.5), ErrorSpec::gaussian()), InvalidParameter);
  EXPECT_THROW(loglik_general(y, 0.0, 0.5, pair(0.5, 0.5), ErrorSpec::gaussian()), InvalidParameter);
}

TEST(Loglik, TruncatedErrorsOutsideSupport) {
  Vector y(1);
  y << 3.0;
  EXPECT_EQ(loglik_general(y, 1.0, 0.0, SparseWeights(1), ErrorSpec::truncated_gaussian(2.0)), -HUGE_VAL);
}

TEST(Score, MatchesCentralDifferences) {
  Rng64 rng(16);
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = testing::uniform_index(rng, 2, 50);
    const SparseWeights w = testing::random_triangular_weights(rng, n, 0.2, true);
    const double alpha = testing::uniform(rng, 0.3, 3.0), rho = testing::uniform(rng, 0.05, 1.5);
    const Vector y = random_y(rng, n);
    const auto ll = [&](double a, double r) { return loglik_triangular(y, a, r, w, ErrorSpec::gaussian()); };
    const Eigen::Vector2d s = score_triangular(y, alpha, rho, w, ErrorSpec::gaussian());
    const double ha = 1e-5 * alpha, hr = 1e-5 * rho;
    const double fa = (ll(alpha + ha, rho) - ll(alpha - ha, rho)) / (2 * ha);
    const double fr = (ll(alpha, rho + hr) - ll(alpha, rho - hr)) / (2 * hr);
    EXPECT_LE(std::abs(s(0) - fa), 1e-6 * std::max(1.0, std::abs(fa)));
    EXPECT_LE(std::abs(s(1) - fr), 1e-6 * std::max(1.0, std::abs(fr)));
  }
}

TEST(Score, ClosedFormsWithoutDependence) {
  Rng64 rng(18);
  const Index n = 30;
  const SparseWeights w = testing::random_triangular_weights(rng, n, 0.3, false);
  const Vector y = random_y(rng, n);
  const double alpha = 1.7;
  const Eigen::Vector2d s = score_triangular(y, alpha, 0.0, w, ErrorSpec::gaussian());
  EXPECT_NEAR(s(0), (y.array().square() - alpha).sum() / (2 * alpha * alpha), 1e-12);
  const double mean_y2 = y.squaredNorm() / n;
  EXPECT_NEAR(score_triangular(y, mean_y2, 0.0, w, ErrorSpec::gaussian())(0), 0.0, 1e-12);
  const Eigen::Vector2d z = score_triangular(Vector::Zero(n), alpha, 0.4, w, ErrorSpec::gaussian());
  EXPECT_NEAR(z(0), -n / (2 * alpha), 1e-12);

  const Vector at_mean = Vector::Constant(n, std::sqrt(alpha));
  const Eigen::Matrix2d info = information_matrix(at_mean, alpha, 0.0, w);
  EXPECT_NEAR(info(0, 0), n / (2 * alpha * alpha), 1e-12);
  EXPECT_EQ(info(0, 1), info(1, 0));
}

TEST(Information, MatchesFiniteDifferenceHessian) {
  Rng64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = testing::uniform_index(rng, 5, 40);
    const SparseWeights w = testing::random_triangular_weights(rng, n, 0.2, true);
    const double alpha = testing::uniform(rng, 0.5, 2.0), rho = testing::uniform(rng, 0.1, 1.0);
    const Vector y = random_y(rng, n);
    const auto s = [&](double a, double r) { return score_triangular(y, a, r, w, ErrorSpec::gaussian()); };
    const double h = 1e-6;
    Eigen::Matrix2d fd;
    fd.col(0) = -(s(alpha + h, rho) - s(alpha - h, rho)) / (2 * h);
    fd.col(1) = -(s(alpha, rho + h) - s(alpha, rho - h)) / (2 * h);
    const Eigen::Matrix2d info = information_matrix(y, alpha, rho, w);
    EXPECT_LE((info - fd).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  }
}

TEST(Aic, Examples) {
  EXPECT_DOUBLE_EQ(aic(0.0, 2), 4.0);
  EXPECT_DOUBLE_EQ(aic(-10.0, 2), 24.0);
  EXPECT_DOUBLE_EQ(aic(5.0, 3), -4.0);
  FitResult f;
  f.loglik = -1.5;
  f.parameters = 1;
  EXPECT_DOUBLE_EQ(aic(f), 5.0);
}

TEST(FitConfig, Validation) {
  FitConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_iterations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = FitConfig{};
  c.initial_alpha = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = FitConfig{};
  c.fixed_rho = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_parameterization("dense"), ConfigError);
  EXPECT_EQ(parse_parameterization("general"), Parameterization::general);
}

SparseWeights oriented_queen(Index d) {
  const auto c = static_cast<double>(d / 2);
  return build_oriented(build_queen(d), SpatialDomain::lattice(d), Location{{c, c}});
}

TEST(FitMl, RecoversParameters) {
  const Index d = 30;
  const SparseWeights w = oriented_queen(d);
  const SpArchModel m = SpArchModel::homogeneous(1.0, w.scaled(0.5), ErrorSpec::gaussian());
  const Realization r = simulate(m, 42);
  const FitResult fit = fit_ml(r.y, w);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.estimate("alpha"), 1.0, 0.2);
  EXPECT_NEAR(fit.estimate("rho"), 0.5, 0.15);
  EXPECT_GT(fit.standard_error("rho"), 0.0);
  EXPECT_TRUE(fit.information_positive_definite);
  EXPECT_NEAR(fit.loglik, loglik_triangular(r.y, fit.estimates(0), fit.estimates(1), w, ErrorSpec::gaussian()), 1e-9);
  EXPECT_DOUBLE_EQ(fit.aic, 4.0 - 2.0 * fit.loglik);
  for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
    EXPECT_GE(fit.loglik_trace[k], fit.loglik_trace[k - 1] - 1e-9);
  }
  EXPECT_THROW((void)fit.estimate("beta_0"), std::out_of_range);
}

TEST(Bfgs, CoupledQuadraticWithActiveBound) {
  // 0.5 x'Qx - b'x with Q = [[4, 3], [3, 5]], b = (4, -10); constrained minimum (1, 0).
  const Objective f = [](const Vector& x, Vector* g) {
    const double q = 2.0 * x(0) * x(0) + 3.0 * x(0) * x(1) + 2.5 * x(1) * x(1) - 4.0 * x(0) + 10.0 * x(1);
    if (g != nullptr) {
      g->resize(2);
      (*g)(0) = 4.0 * x(0) + 3.0 * x(1) - 4.0;
      (*g)(1) = 3.0 * x(0) + 5.0 * x(1) + 10.0;
    }
    return q;
  };
  const OptimizeResult r = minimize_bfgs(f, Eigen::Vector2d(5.0, 2.0), Eigen::Vector2d(-std::numeric_limits<double>::infinity(), 0.0));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 1.0, 1e-6);
  EXPECT_EQ(r.x(1), 0.0);
  EXPECT_LE(r.iterations, 20);
}

TEST(FitMl, ConvergesWithRhoOnTheBoundary) {
  const SparseWeights w = row_standardize(oriented_queen(10));
  const Vector y = simulate(SpArchModel::homogeneous(1.0, w.scaled(0.2), ErrorSpec::gaussian()), 9109).y;
  const FitResult fit = fit_ml(y, w);
  ASSERT_TRUE(fit.converged);
  EXPECT_TRUE(fit.rho_at_boundary);
  EXPECT_LE(fit.iterations, 30);
  // On the boundary alpha-hat is the white-noise estimate.
  EXPECT_NEAR(fit.estimate("alpha"), y.squaredNorm() / static_cast<double>(y.size()), 1e-6);
}

TEST(FitMl, GeneralParameterizationAgrees) {
  const Index d = 12;
  const SparseWeights w = oriented_queen(d);
  const Realization r = simulate(SpArchModel::homogeneous(1.0, w.scaled(0.4), ErrorSpec::gaussian()), 7);
  FitConfig c;
  c.gradient_tolerance = 1e-9;
  const FitResult tri = fit_ml(r.y, w, c);
  c.parameterization = Parameterization::general;
  const FitResult gen = fit_ml(r.y, w, c);
  EXPECT_NEAR(tri.estimate("alpha"), gen.estimate("alpha"), 1e-4);
  EXPECT_NEAR(tri.estimate("rho"), gen.estimate("rho"), 1e-4);
  EXPECT_NEAR(tri.loglik, gen.loglik, 1e-6);
}

TEST(FitMl, WhiteNoiseGivesSampleVariance) {
  const Index d = 30;
  const SparseWeights w = oriented_queen(d);
  const Realization r = simulate(SpArchModel::homogeneous(2.0, SparseWeights(d * d), ErrorSpec::gaussian()), 3);
  FitConfig c;
  c.fixed_rho = 0.0;
  const FitResult fit = fit_ml(r.y, w, c);
  EXPECT_NEAR(fit.estimate("alpha"), r.y.squaredNorm() / static_cast<double>(d * d), 1e-6);
  EXPECT_EQ(fit.parameters, 1);
}

TEST(FitSarSparch, InterceptOnlyWithoutLagsIsDemeanedFit) {
  const Index d = 15, n = d * d;
  const SparseWeights w = oriented_queen(d);
  Vector y = simulate(SpArchModel::homogeneous(1.0, w.scaled(0.5), ErrorSpec::gaussian()), 4).y;
  y.array() += 3.0;
  FitConfig c;
  c.gradient_tolerance = 1e-9;
  const FitResult joint = fit_sar_sparch(y, Matrix::Ones(n, 1), {}, w, c);
  EXPECT_EQ(joint.model, "spARCH");
  EXPECT_NEAR(joint.estimate("beta_0"), 3.0, 3.0 * joint.standard_error("beta_0"));
  const Vector centered = (y.array() - joint.estimate("beta_0")).matrix();
  const FitResult direct = fit_ml(centered, w, c);
  EXPECT_NEAR(direct.estimate("alpha"), joint.estimate("alpha"), 1e-4);
  EXPECT_NEAR(direct.estimate("rho"), joint.estimate("rho"), 1e-4);

  const Vector white = (draw_innovations(ErrorSpec::gaussian(), n, 5).array() + 3.0).matrix();
  c.fixed_rho = 0.0;
  EXPECT_NEAR(fit_sar_sparch(white, Matrix::Ones(n, 1), {}, w, c).estimate("beta_0"), white.mean(), 1e-6);
}

TEST(FitMl, TriangularRequestNeedsTriangularWeights) {
  EXPECT_THROW(fit_ml(Vector::Ones(2), pair(0.5, 0.5)), InvalidWeights);
}

TEST(TwoStage, NoiselessDataAreExact) {
  const Index d = 8, n = d * d;
  Rng64 rng(21);
  Matrix x(n, 3);
  x.col(0).setOnes();
  for (Index i = 0; i < n; ++i) {
    x(i, 1) = testing::standard_normal(rng);
    x(i, 2) = testing::standard_normal(rng);
  }
  Vector beta(3);
  beta << 1.0, -0.5, 2.0;
  const Matrix s = Matrix::Identity(n, n) - 0.4 * dense(build_rook(d));
  const Vector y = s.partialPivLu().solve(x * beta);
  const TwoStageResult r = two_stage_least_squares(y, x, {build_rook(d)});
  EXPECT_NEAR(r.lambda[0], 0.4, 1e-9);
  EXPECT_LT((r.beta - beta).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(r.residuals.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FitSar, MatchesDenseQml) {
  const Index d = 8, n = d * d;
  Rng64 rng(22);
  Matrix x(n, 2);
  x.col(0).setOnes();
  for (Index i = 0; i < n; ++i) x(i, 1) = testing::standard_normal(rng);
  Vector beta(2);
  beta << 1.0, 0.5;
  const std::vector<SparseWeights> b{build_queen_lag(d, 1), build_queen_lag(d, 2)};
  const SarSpArchModel m(x, beta, {0.3, 0.2}, b, SpArchModel::homogeneous(1.0, SparseWeights(n), ErrorSpec::gaussian()));
  const Vector y = simulate_sar_sparch(m, 5).y;
  FitConfig c;
  c.gradient_tolerance = 1e-10;
  c.max_iterations = 1000;
  const FitResult fit = fit_sar(y, x, b, c);
  const auto want = testing::sar_qml(y, x, {dense(b[0]), dense(b[1])});
  EXPECT_EQ(fit.model, "SAR");
  EXPECT_NEAR(fit.estimate("beta_0"), want.beta(0), 1e-6);
  EXPECT_NEAR(fit.estimate("beta_1"), want.beta(1), 1e-6);
  EXPECT_NEAR(fit.estimate("lambda_1"), want.lambda[0], 1e-6);
  EXPECT_NEAR(fit.estimate("lambda_2"), want.lambda[1], 1e-6);
  EXPECT_NEAR(fit.estimate("sigma2"), want.sigma2, 1e-6);
  EXPECT_NEAR(fit.loglik, want.loglik, 1e-6);
}

TEST(FitSarSparch, RecoversDisturbanceProcess) {
  const Index d = 20, n = d * d;
  const SparseWeights wt = row_standardize(oriented_queen(d));
  Rng64 rng(23);
  Matrix x(n, 2);
  x.col(0).setOnes();
  for (Index i = 0; i < n; ++i) x(i, 1) = testing::standard_normal(rng);
  Vector beta(2);
  beta << 1.0, 0.5;
  const std::vector<SparseWeights> b{build_queen_lag(d, 1)};
  const SarSpArchModel m(x, beta, {0.4}, b, SpArchModel::homogeneous(1.0, wt.scaled(0.6), ErrorSpec::gaussian()));
  const Vector y = simulate_sar_sparch(m, 9).y;
  const FitResult fit = fit_sar_sparch(y, x, b, wt);
  ASSERT_TRUE(fit.converged);
  EXPECT_EQ(fit.model, "SARspARCH");
  for (const auto& [name, truth] : {std::pair{"lambda_1", 0.4}, std::pair{"beta_1", 0.5}, std::pair{"rho", 0.6}}) {
    EXPECT_NEAR(fit.estimate(name), truth, 3.0 * fit.standard_error(name)) << name;
  }
  const FitResult plain = fit_sar(y, x, b);
  EXPECT_GT(fit.loglik, plain.loglik);
  EXPECT_LT(fit.aic, plain.aic);
  EXPECT_LT((fit.eps.array() - fit.xi.array() / fit.h.array().sqrt()).abs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace sparch
