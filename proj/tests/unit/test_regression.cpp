#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace bgsindy;
using bgsindy::testing::random_matrix;
using bgsindy::testing::random_vector;

TEST(LeastSquares, IdentityReturnsTheTarget) {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd ut = Eigen::Vector4d(1.0, -2.0, 0.5, 3.0);
  const auto fit = least_squares(phi, ut);
  EXPECT_LT((fit.coefficients - ut).norm(), 1e-15);
  EXPECT_NEAR(fit.residual, 0.0, 1e-30);
  EXPECT_EQ(fit.rank, 4);
}

TEST(LeastSquares, OnesColumnGivesTheMean) {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(2, 1);
  const Eigen::VectorXd ut = Eigen::Vector2d(1.0, 3.0);
  const auto fit = least_squares(phi, ut);
  EXPECT_NEAR(fit.coefficients(0), 2.0, 1e-15);
  EXPECT_NEAR(fit.residual, 1.0, 1e-15);
  EXPECT_NEAR(residual(phi, fit.coefficients, ut), 1.0, 1e-15);
}

TEST(LeastSquares, AgreesWithNormalEquationsOnRandomSystems) {
  std::mt19937_64 rng(17);
  for (int r = 0; r < 20; ++r) {
    const Eigen::MatrixXd phi = random_matrix(50, 5, rng);
    const Eigen::VectorXd ut = random_vector(50, rng);
    const auto fit = least_squares(phi, ut);
    EXPECT_LT((fit.coefficients - bgsindy::testing::normal_equations(phi, ut)).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_LT(bgsindy::testing::least_squares_oracle_error(100, 3), 1e-8);
}

TEST(LeastSquares, ResidualMatchesTheFit) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd phi = random_matrix(30, 4, rng);
  const Eigen::VectorXd ut = random_vector(30, rng);
  const auto fit = least_squares(phi, ut);
  EXPECT_DOUBLE_EQ(fit.residual, residual(phi, fit.coefficients, ut));
  EXPECT_NEAR(fit.residual, (phi * fit.coefficients - ut).squaredNorm() / 30.0, 1e-15);
}

TEST(LeastSquares, RemovingAColumnNeverLowersTheResidual) {
  std::mt19937_64 rng(6);
  for (int r = 0; r < 20; ++r) {
    const Eigen::MatrixXd phi = random_matrix(40, 6, rng);
    const Eigen::VectorXd ut = random_vector(40, rng);
    const double full = least_squares(phi, ut).residual;
    for (Eigen::Index drop = 0; drop < 6; ++drop) {
      Eigen::MatrixXd sub(40, 5);
      for (Eigen::Index j = 0, k = 0; j < 6; ++j)
        if (j != drop) sub.col(k++) = phi.col(j);
      EXPECT_GE(least_squares(sub, ut).residual, full * (1.0 - 1e-12));
    }
  }
}

TEST(LeastSquares, ColumnScalingScalesOnlyThatCoefficient) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd phi = random_matrix(30, 4, rng);
  const Eigen::VectorXd ut = random_vector(30, rng);
  Eigen::MatrixXd scaled = phi;
  scaled.col(2) *= 1e5;
  const auto a = least_squares(phi, ut), b = least_squares(scaled, ut);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double expect = j == 2 ? a.coefficients(j) / 1e5 : a.coefficients(j);
    EXPECT_NEAR(b.coefficients(j), expect, 1e-10 * std::abs(expect) + 1e-16);
  }
  EXPECT_NEAR(a.residual, b.residual, 1e-12 * a.residual);
}

TEST(LeastSquares, RankDeficientGivesTheMinimumNormSolution) {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd phi(20, 3);
  phi.leftCols(2) = random_matrix(20, 2, rng);
  phi.col(2) = phi.col(0);
  const Eigen::VectorXd ut = random_vector(20, rng);
  const auto fit = least_squares(phi, ut);
  EXPECT_EQ(fit.rank, 2);
  // Pseudo-inverse oracle from the complete orthogonal decomposition.
  const Eigen::VectorXd oracle = phi.completeOrthogonalDecomposition().solve(ut);
  EXPECT_LT((fit.coefficients - oracle).norm(), 1e-10);
  EXPECT_NEAR(fit.coefficients(0), fit.coefficients(2), 1e-10);
}

TEST(LeastSquares, RejectsBadInput) {
  EXPECT_THROW((void)least_squares(Eigen::MatrixXd(3, 0), Eigen::VectorXd::Zero(3)), ConfigError);
  EXPECT_THROW((void)least_squares(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(4)), ConfigError);
  EXPECT_THROW((void)least_squares(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1)), ConfigError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(3, 1);
  bad(1, 0) = std::nan("");
  EXPECT_THROW((void)least_squares(bad, Eigen::VectorXd::Zero(3)), NumericalError);
  EXPECT_THROW((void)residual(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)), ConfigError);
}

TEST(SubsetSolver, MatchesDirectFitsOnSubsets) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd phi = random_matrix(80, 6, rng);
  const Eigen::VectorXd ut = random_vector(80, rng);
  const SubsetSolver solver(phi, ut);
  for (const std::vector<std::size_t>& cols : {std::vector<std::size_t>{0, 1, 2, 3, 4, 5}, {1, 4}, {5}, {0, 2, 3}}) {
    Eigen::MatrixXd sub(80, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = phi.col(static_cast<Eigen::Index>(cols[k]));
    const auto a = solver.fit(cols), b = least_squares(sub, ut);
    EXPECT_LT((a.coefficients - b.coefficients).norm(), 1e-10);
    EXPECT_NEAR(a.residual, b.residual, 1e-12 * b.residual);
  }
}
