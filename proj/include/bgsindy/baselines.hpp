#ifndef BGSINDY_BASELINES_HPP
#define BGSINDY_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bgsindy/error.hpp"
#include "bgsindy/library.hpp"
#include "bgsindy/model.hpp"
#include "bgsindy/regression.hpp"
#include "bgsindy/sampling.hpp"

namespace bgsindy {

struct StlsqConfig {
  double threshold = 0.1;
  int max_iter = 25;
};

struct StridgeConfig {
  double lambda = 1e-5;
  double d_tol = 1.0;
  int max_iter = 10;   ///< tolerance-search iterations
  int str_iters = 10;  ///< inner threshold/refit iterations
  double split = 0.8;
  /// Column normalization norm used inside STRidge (0 disables).
  int normalize = 2;
  /// Empty: 0.001 * cond(Phi).
  std::optional<double> l0_penalty;
  std::uint64_t seed = 0;
};

inline StlsqConfig stlsq_config_from_json(const nlohmann::json& j) {
  StlsqConfig c;
  try {
    c.threshold = j.value("threshold", c.threshold);
    c.max_iter = j.value("max_iter", c.max_iter);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed stlsq parameters: ") + e.what());
  }
  return c;
}

inline StridgeConfig stridge_config_from_json(const nlohmann::json& j) {
  StridgeConfig c;
  try {
    c.lambda = j.value("lambda", c.lambda);
    c.d_tol = j.value("d_tol", c.d_tol);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.str_iters = j.value("str_iters", c.str_iters);
    c.split = j.value("split", c.split);
    c.normalize = j.value("normalize", c.normalize);
    if (j.contains("l0_penalty") && !j.at("l0_penalty").is_null()) c.l0_penalty = j.at("l0_penalty").get<double>();
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed stridge parameters: ") + e.what());
  }
  return c;
}

namespace detail {

inline Eigen::MatrixXd take_cols(const Eigen::Ref<const Eigen::MatrixXd>& a, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  return out;
}

inline Eigen::MatrixXd take_rows(const Eigen::Ref<const Eigen::MatrixXd>& a, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = a.row(rows[k]);
  return out;
}

inline Eigen::VectorXd take(const Eigen::Ref<const Eigen::VectorXd>& v, const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
  return out;
}

inline DiscoveredModel model_from_support(const Library& lib, const std::vector<Eigen::Index>& support) {
  DiscoveredModel m;
  m.target_field = lib.target_field;
  if (support.empty()) {
    m.residual = lib.target.squaredNorm() / static_cast<double>(lib.target.size());
    m.flags.push_back("all-terms-eliminated");
    return m;
  }
  const Eigen::MatrixXd phi = take_cols(lib.matrix, support);
  const FitResult fit = least_squares(phi, lib.target);
  for (std::size_t k = 0; k < support.size(); ++k) {
    m.terms.push_back(lib.terms[static_cast<std::size_t>(support[k])]);
    m.coefficients.push_back(fit.coefficients(static_cast<Eigen::Index>(k)));
  }
  m.residual = fit.residual;
  return m;
}

/// Ridge solution of (X^T X + lambda I) w = X^T y; plain least squares when lambda is 0.
inline Eigen::VectorXd ridge(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                             double lambda) {
  if (lambda == 0.0) return least_squares(x, y).coefficients;
  Eigen::MatrixXd g = x.transpose() * x;
  g.diagonal().array() += lambda;
  return g.colPivHouseholderQr().solve(x.transpose() * y);
}

} // namespace detail

/// Sequentially thresholded least squares.
inline DiscoveredModel stlsq(const Library& lib, const StlsqConfig& cfg = {}) {
  if (!(cfg.threshold >= 0.0)) throw ConfigError("stlsq: threshold must be non-negative");
  if (cfg.max_iter < 1) throw ConfigError("stlsq: max_iter must be positive");
  std::vector<Eigen::Index> active(lib.cols());
  std::iota(active.begin(), active.end(), Eigen::Index{0});
  Eigen::VectorXd xi = least_squares(lib.matrix, lib.target).coefficients;
  for (int it = 0; it < cfg.max_iter && !active.empty(); ++it) {
    std::vector<Eigen::Index> keep;
    for (std::size_t k = 0; k < active.size(); ++k)
      if (std::abs(xi(static_cast<Eigen::Index>(k))) >= cfg.threshold) keep.push_back(active[k]);
    if (keep.size() == active.size()) break;
    active = std::move(keep);
    if (active.empty()) break;
    xi = least_squares(detail::take_cols(lib.matrix, active), lib.target).coefficients;
  }
  return detail::model_from_support(lib, active);
}

/// Ridge regression with hard thresholding, following the PDE-FIND STRidge
/// routine. Thresholds apply to coefficients of the normalized columns;
/// the returned coefficients are for the original columns.
inline Eigen::VectorXd stridge(const Eigen::Ref<const Eigen::MatrixXd>& x0, const Eigen::Ref<const Eigen::VectorXd>& y,
                               double lambda, int max_iter, double tol, int normalize) {
  const Eigen::Index d = x0.cols();
  Eigen::VectorXd mreg = Eigen::VectorXd::Ones(d);
  Eigen::MatrixXd x = x0;
  if (normalize != 0) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double nrm = normalize == 2 ? x0.col(i).norm() : x0.col(i).lpNorm<1>();
      mreg(i) = nrm > 0.0 ? 1.0 / nrm : 1.0;
      x.col(i) *= mreg(i);
    }
  }
  Eigen::VectorXd w = detail::ridge(x, y, lambda);

  std::vector<Eigen::Index> big;
  for (Eigen::Index i = 0; i < d; ++i)
    if (std::abs(w(i)) > tol) big.push_back(i);
  std::size_t num_relevant = static_cast<std::size_t>(d);

  for (int j = 0; j < max_iter; ++j) {
    std::vector<Eigen::Index> small, new_big;
    for (Eigen::Index i = 0; i < d; ++i) (std::abs(w(i)) < tol ? small : new_big).push_back(i);
    if (num_relevant == new_big.size()) break;
    num_relevant = new_big.size();
    if (new_big.empty()) {
      // The reference routine hands back the unthresholded first fit here.
      if (j == 0) return mreg.cwiseProduct(w);
      break;
    }
    big = new_big;
    for (auto i : small) w(i) = 0.0;
    const Eigen::VectorXd wb = detail::ridge(detail::take_cols(x, big), y, lambda);
    for (std::size_t k = 0; k < big.size(); ++k) w(big[k]) = wb(static_cast<Eigen::Index>(k));
  }
  if (!big.empty()) {
    const Eigen::VectorXd wb = least_squares(detail::take_cols(x, big), y).coefficients;
    for (std::size_t k = 0; k < big.size(); ++k) w(big[k]) = wb(static_cast<Eigen::Index>(k));
  }
  return mreg.cwiseProduct(w);
}

/// 2-norm condition number of a matrix.
inline double condition_number(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

/// PDE-FIND's TrainSTRidge: threshold search scored on a held-out split
/// (validation 2-norm error plus l0_penalty * nonzeros); the winning
/// support is refit on all samples.
inline DiscoveredModel train_stridge(const Library& lib, const StridgeConfig& cfg = {}) {
  if (!(cfg.split > 0.0 && cfg.split < 1.0)) throw ConfigError("train_stridge: split must lie in (0, 1)");
  if (cfg.max_iter < 1 || cfg.str_iters < 0) throw ConfigError("train_stridge: iteration counts must be positive");
  if (!(cfg.lambda >= 0.0) || !(cfg.d_tol >= 0.0)) throw ConfigError("train_stridge: lambda and d_tol must be non-negative");
  const Eigen::Index n = lib.matrix.rows(), d = lib.matrix.cols();
  const auto n_train = static_cast<Eigen::Index>(static_cast<double>(n) * cfg.split);
  if (n_train < d || n - n_train < 1) throw ConfigError("train_stridge: too few samples for the split");

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(cfg.seed);
  detail::shuffle_in_place(perm, rng);
  std::vector<Eigen::Index> train(perm.begin(), perm.begin() + n_train), test(perm.begin() + n_train, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  const Eigen::MatrixXd train_x = detail::take_rows(lib.matrix, train), test_x = detail::take_rows(lib.matrix, test);
  const Eigen::VectorXd train_y = detail::take(lib.target, train), test_y = detail::take(lib.target, test);

  const double l0 = cfg.l0_penalty ? *cfg.l0_penalty : 0.001 * condition_number(lib.matrix);
  auto score = [&](const Eigen::VectorXd& w) {
    return (test_y - test_x * w).norm() + l0 * static_cast<double>((w.array() != 0.0).count());
  };

  Eigen::VectorXd w_best = least_squares(train_x, train_y).coefficients;
  double err_best = score(w_best);
  double d_tol = cfg.d_tol, tol = cfg.d_tol;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Eigen::VectorXd w = stridge(train_x, train_y, cfg.lambda, cfg.str_iters, tol, cfg.normalize);
    const double err = score(w);
    if (err <= err_best) {
      err_best = err;
      w_best = w;
      tol += d_tol;
    } else {
      tol = std::max(0.0, tol - 2.0 * d_tol);
      d_tol = 2.0 * d_tol / static_cast<double>(cfg.max_iter - it);
      tol += d_tol;
    }
  }

  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < d; ++i)
    if (w_best(i) != 0.0) support.push_back(i);
  return detail::model_from_support(lib, support);
}

} // namespace bgsindy

#endif // BGSINDY_BASELINES_HPP
