#ifndef BGSINDY_REGRESSION_HPP
#define BGSINDY_REGRESSION_HPP

#include <Eigen/Dense>

#include "bgsindy/error.hpp"

namespace bgsindy {

/// Relative singular-value / pivot cutoff used by least_squares.
inline constexpr double lstsq_relative_cutoff = 1e-12;

struct FitResult {
  Eigen::VectorXd coefficients;
  /// Mean squared misfit (1/N)||Phi xi - U_t||^2.
  double residual = 0.0;
  Eigen::Index rank = 0;
};

/// (1/N) * sum_i (Phi xi - U_t)_i^2.
inline double residual(const Eigen::Ref<const Eigen::MatrixXd>& phi, const Eigen::Ref<const Eigen::VectorXd>& xi,
                       const Eigen::Ref<const Eigen::VectorXd>& ut) {
  if (phi.rows() != ut.size() || phi.cols() != xi.size()) throw ConfigError("residual: shape mismatch");
  if (phi.rows() == 0) throw ConfigError("residual: no samples");
  return (phi * xi - ut).squaredNorm() / static_cast<double>(phi.rows());
}

/// Least-squares fit of U_t on the columns of Phi.
///
/// Full-rank problems are solved by column-pivoted QR on unit-norm columns
/// (the scaling is undone on the coefficients, so the solution is the
/// ordinary LS solution). When the numerical rank at the relative cutoff is
/// below K, the minimum-norm solution is taken from a thresholded SVD of the
/// unscaled matrix.
inline FitResult least_squares(const Eigen::Ref<const Eigen::MatrixXd>& phi, const Eigen::Ref<const Eigen::VectorXd>& ut) {
  const Eigen::Index n = phi.rows(), k = phi.cols();
  if (k == 0) throw ConfigError("least_squares: no active columns");
  if (ut.size() != n) throw ConfigError("least_squares: target length differs from row count");
  if (n < k) throw ConfigError("least_squares: fewer samples than columns");
  if (!phi.allFinite() || !ut.allFinite()) throw NumericalError("least_squares: non-finite input");

  Eigen::VectorXd scale(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double nrm = phi.col(j).norm();
    scale(j) = nrm > 0.0 ? 1.0 / nrm : 1.0;
  }
  const Eigen::MatrixXd scaled = phi * scale.asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(lstsq_relative_cutoff);

  FitResult fit;
  fit.rank = qr.rank();
  if (fit.rank == k) {
    fit.coefficients = scale.asDiagonal() * qr.solve(ut);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(lstsq_relative_cutoff);
    fit.coefficients = svd.solve(ut);
  }
  fit.residual = residual(phi, fit.coefficients, ut);
  return fit;
}

} // namespace bgsindy

#endif // BGSINDY_REGRESSION_HPP
