#include "oracles.hpp"

#include "sparch/diagnostics.hpp"
#include "sparch/errors.hpp"
#include "sparch/process.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace sparch {
namespace {

using testing::dense;
using testing::Rng64;

SparseWeights pair(double w12, double w21) {
  std::vector<SparseWeights::Entry> e;
  if (w12 > 0) e.push_back({0, 1, w12});
  if (w21 > 0) e.push_back({1, 0, w21});
  return SparseWeights::from_entries(2, e);
}

SparseWeights chain3() {
  const std::vector<SparseWeights::Entry> e{{1, 0, 0.5}, {2, 1, 0.5}};
  return SparseWeights::from_entries(3, e);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

TEST(BuildA, Examples) {
  const SparseWeights w = pair(0.5, 0.5);
  EXPECT_EQ((Matrix(build_A(Vector::Ones(2), w)) - dense(w)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(Matrix(build_A(Vector::Zero(2), w)).isZero());
  Vector eps(2);
  eps << 1.0, 2.0;
  Matrix want(2, 2);
  want << 0.0, 0.5, 2.0, 0.0;
  EXPECT_EQ((Matrix(build_A(eps, w)) - want).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Eta, Examples) {
  const Vector one = Vector::Ones(2);
  const Vector e = eta(one, one, pair(0.5, 0.5));
  EXPECT_DOUBLE_EQ(e(0), 1.5);
  EXPECT_DOUBLE_EQ(e(1), 1.5);
  Vector eps(2), alpha(2);
  eps << 0.7, -1.3;
  alpha << 2.0, 3.0;
  const Vector white = eta(eps, alpha, SparseWeights(2));
  EXPECT_DOUBLE_EQ(white(0), 2.0 * 0.49);
  EXPECT_DOUBLE_EQ(white(1), 3.0 * 1.69);
  EXPECT_TRUE(eta(Vector::Zero(2), alpha, pair(0.5, 0.5)).isZero());
}

TEST(SolveY2, SymmetricPair) {
  const SpArchModel m(Vector::Ones(2), pair(0.5, 0.5), ErrorSpec::gaussian());
  const Y2Solution s = solve_y2(Vector::Ones(2), m);
  EXPECT_NEAR(s.y2(0), 2.0, 1e-14);
  EXPECT_NEAR(s.y2(1), 2.0, 1e-14);
  EXPECT_NEAR(s.h(0), 2.0, 1e-14);
  EXPECT_NEAR(s.h(1), 2.0, 1e-14);
  const auto cf = closed_form_n2({1.0, 1.0}, {1.0, 1.0}, 0.5, 0.5);
  EXPECT_TRUE(cf.admissible);
  EXPECT_DOUBLE_EQ(cf.y2[0], 2.0);
}

TEST(SolveY2, WhiteNoise) {
  const SpArchModel m(Vector::Ones(4), SparseWeights(4), ErrorSpec::gaussian());
  Vector eps(4);
  eps << 0.3, -1.1, 2.0, 0.0;
  const Y2Solution s = solve_y2(eps, m);
  EXPECT_EQ((s.y2 - eps.array().square().matrix()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((s.h - Vector::Ones(4)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SolveY2, ChainByHand) {
  const SpArchModel m(Vector::Ones(3), chain3(), ErrorSpec::gaussian());
  const Y2Solution s = solve_y2(Vector::Ones(3), m);
  EXPECT_DOUBLE_EQ(s.h(0), 1.0);
  EXPECT_DOUBLE_EQ(s.h(1), 1.5);
  EXPECT_DOUBLE_EQ(s.h(2), 1.75);
  EXPECT_EQ((s.y2 - s.h).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SolveY2, InadmissiblePairIsReported) {
  const SpArchModel m(Vector::Ones(2), pair(3.0, 3.0), ErrorSpec::gaussian());
  EXPECT_THROW(solve_y2(Vector::Ones(2), m), NonnegativityViolation);
  EXPECT_FALSE(closed_form_n2({1.0, 1.0}, {1.0, 1.0}, 3.0, 3.0).admissible);
}

TEST(ClosedFormN2, Examples) {
  EXPECT_FALSE(closed_form_n2({2.0, 2.0}, {1.0, 1.0}, 0.5, 0.5).admissible);
  const auto one_way = closed_form_n2({5.0, 7.0}, {1.0, 2.0}, 0.0, 0.9);
  EXPECT_TRUE(one_way.admissible);
  EXPECT_DOUBLE_EQ(one_way.y2[0], 25.0);
  EXPECT_DOUBLE_EQ(one_way.y2[1], 49.0 * (2.0 + 0.9 * 25.0));
}

TEST(SolveY2, TriangularEqualsSquaredSystem) {
  Rng64 rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = testing::uniform_index(rng, 2, 50);
    const SparseWeights w = testing::random_triangular_weights(rng, n, 0.15, true);
    Vector alpha(n), eps(n);
    for (Index i = 0; i < n; ++i) {
      alpha(i) = testing::uniform(rng, 0.1, 2.0);
      eps(i) = testing::uniform(rng, -1.2, 1.2);
    }
    const SpArchModel m(alpha, w, ErrorSpec::gaussian());
    const Y2Solution fast = solve_y2(eps, m);
    const Y2Solution slow = solve_y2_squared(eps, m);
    for (Index i = 0; i < n; ++i) {
      EXPECT_LE(std::abs(fast.y2(i) - slow.y2(i)), 1e-10 * std::max(1.0, std::abs(slow.y2(i))));
    }
  }
}

TEST(SolveY2, GeneralMatchesDenseOracle) {
  Rng64 rng(2);
  for (int rep = 0; rep < 60; ++rep) {
    const Index n = testing::uniform_index(rng, 2, 40);
    const SparseWeights raw = testing::random_weights(rng, n, 0.2, 1.0);
    const double bound = support_bound(raw);
    Vector alpha(n), eps(n);
    for (Index i = 0; i < n; ++i) {
      alpha(i) = testing::uniform(rng, 0.1, 2.0);
      eps(i) = testing::uniform(rng, -0.99, 0.99) * std::min(bound, 10.0);
    }
    const SpArchModel m(alpha, raw, ErrorSpec::gaussian());
    const Y2Solution s = solve_y2(eps, m);
    const Vector want = testing::dense_y2(eps, alpha, dense(raw));
    for (Index i = 0; i < n; ++i) EXPECT_LE(rel(s.y2(i), want(i)), 1e-10) << "rep " << rep;
    EXPECT_LT((s.h - (alpha + raw.apply(s.y2))).cwiseAbs().maxCoeff(), 1e-12 * s.h.maxCoeff());
  }
}

TEST(SolveY2, NeumannSeriesConverges) {
  Rng64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = testing::uniform_index(rng, 3, 25);
    const SparseWeights w = testing::random_weights(rng, n, 0.3, 1.0);
    const double a = 0.9 * std::min(support_bound(w), 3.0);
    Vector alpha = Vector::Ones(n), eps(n);
    for (Index i = 0; i < n; ++i) eps(i) = testing::uniform(rng, -a, a);
    const SpArchModel m(alpha, w, ErrorSpec::gaussian());
    const Vector exact = solve_y2(eps, m).y2;
    double previous = HUGE_VAL;
    for (int k : {0, 2, 4, 8, 16, 32, 64}) {
      const double err = (testing::neumann_y2(eps, alpha, dense(w), k) - exact).lpNorm<Eigen::Infinity>();
      EXPECT_LE(err, previous * (1 + 1e-12) + 1e-14);
      previous = err;
    }
    EXPECT_LT(previous, 1e-6 * exact.maxCoeff());
  }
}

TEST(Simulate, SignFlipKeepsSquares) {
  const SpArchModel m = SpArchModel::homogeneous(1.0, build_rook(6).scaled(0.5),
                                                 ErrorSpec::truncated_gaussian(0.99 * support_bound(build_rook(6).scaled(0.5))));
  const Vector eps = draw_innovations(m.error(), m.size(), 17);
  const Realization a = realize(m, eps);
  const Realization b = realize(m, -eps);
  EXPECT_EQ((a.h - b.h).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.y2 - b.y2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.y + b.y).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulate, WhiteNoiseReturnsInnovations) {
  const SpArchModel m = SpArchModel::homogeneous(1.0, SparseWeights(50), ErrorSpec::gaussian());
  const Realization r = simulate(m, 99);
  EXPECT_EQ((r.y - draw_innovations(m.error(), 50, 99)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.seed, 99u);
}

TEST(Simulate, Deterministic) {
  const SpArchModel m = SpArchModel::homogeneous(2.0, build_rook(8).scaled(0.4),
                                                 ErrorSpec::truncated_gaussian(1.2));
  const Realization a = simulate(m, 5);
  const Realization b = simulate(m, 5);
  EXPECT_EQ((a.y - b.y).cwiseAbs().maxCoeff(), 0.0);
  Simulator sim(m);
  const Realization c = sim(5);
  EXPECT_EQ((a.y - c.y).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulate, RealizationInvariants) {
  const SparseWeights w = build_rook(10).scaled(0.5);
  const SpArchModel m = SpArchModel::homogeneous(1.0, w, ErrorSpec::truncated_gaussian(0.999 * support_bound(w)));
  Simulator sim(m);
  for (Seed s = 0; s < 50; ++s) {
    const Realization r = sim(s);
    for (Index i = 0; i < r.y.size(); ++i) {
      EXPECT_NEAR(r.y(i), std::sqrt(r.h(i)) * r.eps(i), 1e-12 * std::max(1.0, std::abs(r.y(i))));
      EXPECT_NEAR(r.y2(i), r.y(i) * r.y(i), 1e-12 * std::max(1.0, r.y2(i)));
      EXPECT_GE(r.h(i), 0.0);
      EXPECT_GE(r.y2(i), 0.0);
    }
  }
}

TEST(Simulate, OddMomentsVanish) {
  const SpArchModel m(Vector::Ones(3), chain3(), ErrorSpec::gaussian());
  Simulator sim(m);
  const int reps = 100000;
  Vector sum = Vector::Zero(3), sum2 = Vector::Zero(3);
  for (int r = 0; r < reps; ++r) {
    const Realization x = sim(static_cast<Seed>(r));
    sum += x.y;
    sum2 += x.y2;
  }
  for (Index i = 0; i < 3; ++i) {
    const double mean = sum(i) / reps;
    const double se = std::sqrt((sum2(i) / reps - mean * mean) / reps);
    EXPECT_LT(std::abs(mean), 4.0 * se) << "site " << i;
  }
}

TEST(Simulate, NoViolationsUnderCertifiedBound) {
  Rng64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = testing::uniform_index(rng, 5, 60);
    const SparseWeights w = testing::random_weights(rng, n, 0.2, 1.0);
    const SpArchModel m = SpArchModel::homogeneous(1.0, w, ErrorSpec::uniform(0.999 * support_bound(w)));
    ASSERT_EQ(m.validity().certificate, Certificate::bounded_support);
    Simulator sim(m);
    for (Seed s = 0; s < 200; ++s) EXPECT_NO_THROW(sim(s));
  }
}

TEST(Validate, Certificates) {
  const SparseWeights tri = chain3();
  EXPECT_EQ(validate(Vector::Ones(3), tri, ErrorSpec::gaussian()).certificate, Certificate::triangular);
  const SparseWeights rook = build_rook(50).scaled(0.5);
  const ValidityReport bounded = validate(Vector::Ones(2500), rook, ErrorSpec::truncated_gaussian(1.33));
  EXPECT_EQ(bounded.certificate, Certificate::bounded_support);
  EXPECT_NEAR(bounded.support_bound, 1.334, 0.005);
  EXPECT_EQ(validate(Vector::Ones(2500), rook, ErrorSpec::gaussian()).certificate, Certificate::unverified);
  EXPECT_EQ(validate(Vector::Ones(2500), rook, ErrorSpec::truncated_gaussian(1.34)).certificate,
            Certificate::unverified);
  Vector bad = Vector::Ones(3);
  bad(1) = -0.1;
  EXPECT_THROW(validate(bad, tri, ErrorSpec::gaussian()), InvalidModel);
  EXPECT_THROW(SpArchModel(bad, tri, ErrorSpec::gaussian()), InvalidModel);
  EXPECT_THROW(SpArchModel(Vector::Ones(2), tri, ErrorSpec::gaussian()), InvalidModel);
}

TEST(Spgarch, Examples) {
  Vector y2(2), alpha(2);
  y2 << 4.0, 9.0;
  alpha << 1.0, 1.0;
  const SparseWeights w1 = pair(0.2, 0.3);
  EXPECT_LT((spgarch_h(y2, alpha, w1, SparseWeights(2)) - (alpha + w1.apply(y2))).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_DOUBLE_EQ(spgarch_h(Vector::Ones(1), Vector::Constant(1, 3.0), SparseWeights(1), SparseWeights(1))(0), 3.0);
  const Vector h = spgarch_h(y2, alpha, SparseWeights(2), pair(0.0, 0.5));
  EXPECT_DOUBLE_EQ(h(0), 1.0);
  EXPECT_DOUBLE_EQ(h(1), 1.5);
}

TEST(Sar, WithoutSarPartYIsXi) {
  const Index n = 16;
  Matrix x = Matrix::Ones(n, 1);
  const SparseWeights w = build_rook(4).scaled(0.3);
  const SarSpArchModel m(x, Vector::Zero(1), {0.0}, {build_rook(4)},
                         SpArchModel::homogeneous(1.0, w, ErrorSpec::truncated_gaussian(1.5)));
  const SarRealization r = simulate_sar_sparch(m, 3);
  EXPECT_LT((r.y - r.noise.y).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Sar, ZeroDisturbanceGivesMeanSurface) {
  const Index d = 5, n = d * d;
  Matrix x(n, 2);
  x.col(0).setOnes();
  for (Index i = 0; i < n; ++i) x(i, 1) = std::sin(static_cast<double>(i));
  Vector beta(2);
  beta << 1.0, -2.0;
  const SarSpArchModel m(x, beta, {0.6}, {build_rook(d)},
                         SpArchModel::homogeneous(1.0, SparseWeights(n), ErrorSpec::gaussian()));
  const Vector got = sar_response(m, Vector::Zero(n));
  const Matrix s = Matrix::Identity(n, n) - 0.6 * dense(build_rook(d));
  const Vector want = s.partialPivLu().solve(x * beta);
  EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sar, Validation) {
  Matrix x = Matrix::Ones(4, 1);
  x(2, 0) = 0.5;
  const SpArchModel noise = SpArchModel::homogeneous(1.0, SparseWeights(4), ErrorSpec::gaussian());
  EXPECT_THROW(SarSpArchModel(x, Vector::Zero(1), {}, {}, noise), InvalidModel);
  EXPECT_THROW(SarSpArchModel(Matrix::Ones(4, 1), Vector::Zero(2), {}, {}, noise), InvalidModel);
  EXPECT_THROW(SarSpArchModel(Matrix::Ones(4, 1), Vector::Zero(1), {0.5}, {}, noise), InvalidModel);
}

TEST(Sar, LevelAndVolatilityClusters) {
  const Index d = 50, n = d * d;
  const SparseWeights rook = build_rook(d);
  const SparseWeights w = rook.scaled(0.5);
  const SarSpArchModel m(Matrix::Ones(n, 1), Vector::Zero(1), {0.8}, {rook},
                         SpArchModel::homogeneous(0.1, w, ErrorSpec::truncated_gaussian(0.999 * support_bound(w))));
  const SarRealization r = simulate_sar_sparch(m, 2024);
  const MoranResult level = morans_i(r.y, rook);
  const MoranResult vol = morans_i(r.noise.y.array().square().matrix(), rook);
  EXPECT_GT(level.z, 3.0);
  EXPECT_LT(level.p, 0.01);
  EXPECT_GT(vol.z, 3.0);
}

}  // namespace
}  // namespace sparch
