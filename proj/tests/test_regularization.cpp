#include "support.hpp"

#include <gpcca/error.hpp>
#include <gpcca/regularization.hpp>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>

namespace gpcca {
namespace {

double min_eigenvalue(const Matrix& s) { return Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff(); }

TEST(RidgeSpec, PenaltyWeight) {
  EXPECT_DOUBLE_EQ(RidgeSpec(0.5).penalty_weight(10), 5.0);
  EXPECT_EQ(RidgeSpec(1.0).penalty_weight(10), 0.0);
  EXPECT_THROW(RidgeSpec(0.0), InputError);
  EXPECT_THROW(RidgeSpec(1.5), InputError);
}

TEST(Correlation, DiagonalPsiGivesIdentity) {
  const BlockSpd psi(BlockLayout({2, 1}), {Vector::Constant(2, 3.0).asDiagonal(), Matrix::Constant(1, 1, 2.0)});
  const auto split = correlation_decompose(psi);
  EXPECT_EQ(split.correlation.dense(), Matrix::Identity(3, 3));
  EXPECT_EQ(split.variances, Vector::Map(std::vector<double>{3, 3, 2}.data(), 3));
}

TEST(Correlation, TwoByTwo) {
  const double eps = 0.25;
  Matrix b(2, 2);
  b << 4, 2, 2, 1 + eps;
  const auto split = correlation_decompose(BlockSpd(BlockLayout({2}), {b}));
  EXPECT_DOUBLE_EQ(split.variances(1), 1 + eps);
  EXPECT_NEAR(split.correlation.block(0)(0, 1), 2.0 / std::sqrt(4.0 * (1 + eps)), 1e-15);
}

TEST(Correlation, RoundTrip) {
  test::Rng rng(1);
  const BlockSpd psi = test::random_block_spd(BlockLayout({4, 3}), rng);
  const auto split = correlation_decompose(psi);
  const Vector s = split.variances.cwiseSqrt();
  EXPECT_LT(test::max_abs_diff(s.asDiagonal() * split.correlation.dense() * s.asDiagonal(), psi.dense()), 1e-12);
}

TEST(RidgeCorrelation, Examples) {
  Matrix r(2, 2);
  r << 1, 0.8, 0.8, 1;
  EXPECT_EQ(ridge_correlation(r, 1.0), r);
  EXPECT_EQ(ridge_correlation(Matrix::Identity(3, 3), 0.3), Matrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(ridge_correlation(r, 0.5)(0, 1), 0.4);
  EXPECT_THROW(ridge_correlation(r, 0.0), InputError);
}

TEST(RidgeCorrelation, AffineInLambda) {
  test::Rng rng(2);
  const auto r = correlation_decompose(test::random_block_spd(BlockLayout({5}), rng)).correlation.block(0);
  for (double lambda : {0.1, 0.5, 2.0 / 3.0, 0.9}) {
    const Matrix expected = lambda * r + (1.0 - lambda) * Matrix::Identity(5, 5);
    EXPECT_LT(test::max_abs_diff(ridge_correlation(r, lambda), expected), 1e-15);
  }
}

TEST(RidgeCovariance, Examples) {
  test::Rng rng(3);
  const BlockSpd psi = test::random_block_spd(BlockLayout({3, 2}), rng);
  EXPECT_EQ(ridge_covariance(psi, 1.0).dense(), psi.dense());
  const BlockSpd diag(BlockLayout({2}), {Vector::Map(std::vector<double>{2, 3}.data(), 2).asDiagonal()});
  EXPECT_EQ(ridge_covariance(diag, 0.5).block(0), Matrix(Vector::Map(std::vector<double>{4, 6}.data(), 2).asDiagonal()));
}

TEST(RidgeCovariance, SmallestEigenvalueIncreases) {
  test::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const BlockSpd psi = test::random_block_spd(BlockLayout({5}), rng);
    EXPECT_GT(min_eigenvalue(ridge_covariance(psi, 2.0 / 3.0).block(0)), min_eigenvalue(psi.block(0)));
  }
}

TEST(RidgePenalty, Examples) {
  const BlockSpd id = BlockSpd::identity(BlockLayout({3, 2}));
  EXPECT_DOUBLE_EQ(ridge_penalty(id, 2.0), -5.0);
  EXPECT_EQ(ridge_penalty(id, 0.0), 0.0);
}

TEST(RidgePenalty, MatchesDenseTrace) {
  test::Rng rng(5);
  const auto corr = correlation_decompose(test::random_block_spd(BlockLayout({4}), rng)).correlation;
  EXPECT_NEAR(ridge_penalty(corr, 1.0), -0.5 * corr.block(0).inverse().trace(), 1e-10);
}

TEST(InflateDiagonal, ScalesDiagonalOnly) {
  Matrix b(2, 2);
  b << 2, 1, 1, 3;
  inflate_diagonal(b, 0.5);
  Matrix expected(2, 2);
  expected << 4, 1, 1, 6;
  EXPECT_EQ(b, expected);
}

}  // namespace
}  // namespace gpcca
