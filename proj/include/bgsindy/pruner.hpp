#ifndef BGSINDY_PRUNER_HPP
#define BGSINDY_PRUNER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bgsindy/error.hpp"
#include "bgsindy/library.hpp"
#include "bgsindy/model.hpp"
#include "bgsindy/regression.hpp"

namespace bgsindy {

/// How the importance stabilizer is chosen when no fixed value is given.
enum class EpsilonRule {
  /// 1e-12 times the largest |Phi_ij xi_j| of the current fit.
  relative,
  /// The larger of the relative value and the RMS misfit sqrt(Res_k) of the
  /// current fit: contributions below the misfit level are not resolved by
  /// the data and should not dominate a row.
  residual,
};

inline std::string to_string(EpsilonRule r) { return r == EpsilonRule::relative ? "relative" : "residual"; }

inline EpsilonRule epsilon_rule_from_string(std::string_view s) {
  if (s == "relative") return EpsilonRule::relative;
  if (s == "residual") return EpsilonRule::residual;
  throw ConfigError("unknown epsilon rule '" + std::string(s) + "'");
}

struct PrunerConfig {
  double tau = 3.0;
  /// Fixed importance stabilizer; empty means `epsilon_rule` decides per fit.
  std::optional<double> epsilon;
  EpsilonRule epsilon_rule = EpsilonRule::residual;
  std::size_t min_terms = 1;
  /// Keep pruning down to min_terms after the ratio rule fires.
  bool record_full_trace = false;

  void validate() const {
    if (!(tau > 1.0)) throw ConfigError("tau must exceed 1");
    if (epsilon && !(*epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (min_terms < 1) throw ConfigError("min_terms must be at least 1");
  }
};

/// Residuals below this are treated as zero by the ratio rule.
inline constexpr double residual_floor = 1e-30;

struct Importance {
  Eigen::MatrixXd local;  ///< w_ij, N x K
  Eigen::VectorXd global; ///< W_j, K
};

inline double default_epsilon(const Eigen::Ref<const Eigen::MatrixXd>& phi, const Eigen::Ref<const Eigen::VectorXd>& xi) {
  const double peak = (phi * xi.asDiagonal()).cwiseAbs().maxCoeff();
  return peak > 0.0 ? 1e-12 * peak : std::numeric_limits<double>::min();
}

namespace detail {
inline void check_importance_args(const Eigen::Ref<const Eigen::MatrixXd>& phi, const Eigen::Ref<const Eigen::VectorXd>& xi,
                                  double epsilon) {
  if (phi.cols() == 0) throw ConfigError("importance: no active terms");
  if (phi.cols() != xi.size()) throw ConfigError("importance: coefficient count differs from column count");
  if (phi.rows() == 0) throw ConfigError("importance: no samples");
  if (!(epsilon > 0.0)) throw ConfigError("importance: epsilon must be positive");
}
} // namespace detail

/// w_ij = |Phi_ij xi_j| / (max_l |Phi_il xi_l| + epsilon) and W_j = mean_i w_ij.
inline Importance importance(const Eigen::Ref<const Eigen::MatrixXd>& phi, const Eigen::Ref<const Eigen::VectorXd>& xi,
                             double epsilon) {
  detail::check_importance_args(phi, xi, epsilon);
  Importance out;
  out.local = (phi * xi.asDiagonal()).cwiseAbs();
  const Eigen::VectorXd denom = out.local.rowwise().maxCoeff().array() + epsilon;
  out.local.array().colwise() /= denom.array();
  out.global = out.local.colwise().mean().transpose();
  return out;
}

/// Global importances only, without materializing the N x K local matrix.
inline Eigen::VectorXd global_importance(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                         const Eigen::Ref<const Eigen::VectorXd>& xi, double epsilon) {
  detail::check_importance_args(phi, xi, epsilon);
  const Eigen::Index n = phi.rows(), k = phi.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(k);
  Eigen::ArrayXd row(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    row = (phi.row(i).transpose().array() * xi.array()).abs();
    sum.array() += row / (row.maxCoeff() + epsilon);
  }
  return sum / static_cast<double>(n);
}

/// Least-squares fits of U_t on arbitrary column subsets of one library.
///
/// The library is factored once, Phi = Q R; a subset S is then fitted on the
/// small system R_S xi = Q^T U_t, whose residual differs from the full one by
/// the fixed component of U_t orthogonal to range(Phi).
class SubsetSolver {
public:
  SubsetSolver(const Eigen::MatrixXd& phi, const Eigen::VectorXd& ut) : n_(phi.rows()) {
    if (phi.cols() == 0) throw ConfigError("SubsetSolver: empty library");
    if (ut.size() != phi.rows()) throw ConfigError("SubsetSolver: target length differs from row count");
    if (phi.rows() < phi.cols()) throw ConfigError("SubsetSolver: fewer samples than columns");
    if (!phi.allFinite() || !ut.allFinite()) throw NumericalError("SubsetSolver: non-finite input");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(phi);
    const Eigen::Index m = phi.cols();
    r_ = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Eigen::VectorXd qty = qr.householderQ().adjoint() * ut;
    c_ = qty.head(m);
    orth_ = qty.tail(n_ - m).squaredNorm();
  }

  FitResult fit(const std::vector<std::size_t>& cols) const {
    Eigen::MatrixXd rs(r_.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) rs.col(static_cast<Eigen::Index>(k)) = r_.col(static_cast<Eigen::Index>(cols[k]));
    FitResult f = least_squares(rs, c_);
    f.residual = ((rs * f.coefficients - c_).squaredNorm() + orth_) / static_cast<double>(n_);
    return f;
  }

private:
  Eigen::Index n_;
  Eigen::MatrixXd r_;
  Eigen::VectorXd c_;
  double orth_ = 0.0;
};

namespace detail {

inline Eigen::MatrixXd gather(const Eigen::MatrixXd& phi, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(phi.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = phi.col(static_cast<Eigen::Index>(cols[k]));
  return out;
}

inline PruneIteration evaluate(const Library& lib, const SubsetSolver& solver, std::vector<std::size_t> active,
                               const PrunerConfig& cfg) {
  PruneIteration it;
  it.active = std::move(active);
  const FitResult fit = solver.fit(it.active);
  const Eigen::MatrixXd phi = gather(lib.matrix, it.active);
  double eps = cfg.epsilon ? *cfg.epsilon : default_epsilon(phi, fit.coefficients);
  if (!cfg.epsilon && cfg.epsilon_rule == EpsilonRule::residual) eps = std::max(eps, std::sqrt(fit.residual));
  const Eigen::VectorXd w = global_importance(phi, fit.coefficients, eps);
  it.coefficients.assign(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
  it.importance.assign(w.data(), w.data() + w.size());
  it.residual = fit.residual;
  return it;
}

/// Position in `it.active` of the least important term; exact ties go to the
/// term that sorts later canonically.
inline std::size_t least_important(const Library& lib, const PruneIteration& it) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < it.active.size(); ++a) {
    const double wa = it.importance[a], wb = it.importance[best];
    if (wa < wb || (wa == wb && lib.terms[it.active[best]] < lib.terms[it.active[a]])) best = a;
  }
  return best;
}

/// Res_{k+1}/Res_k with the zero-floor convention: a jump off a zero
/// residual is infinite, two zero residuals give ratio 1.
inline double residual_ratio(double before, double after) {
  if (before < residual_floor) return after > residual_floor ? std::numeric_limits<double>::infinity() : 1.0;
  return after / before;
}

} // namespace detail

struct PruneStepResult {
  std::size_t removed; ///< library column index
  PruneIteration next;
};

/// Removes the least important active term and refits on the rest.
inline PruneStepResult prune_step(const Library& lib, const SubsetSolver& solver, const PruneIteration& current,
                                  const PrunerConfig& cfg = {}) {
  if (current.active.size() < 2) throw ConfigError("prune_step: active set has a single term");
  const std::size_t pos = detail::least_important(lib, current);
  std::vector<std::size_t> rest = current.active;
  const std::size_t removed = rest[pos];
  rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pos));
  return {removed, detail::evaluate(lib, solver, std::move(rest), cfg)};
}

struct DiscoveryResult {
  DiscoveredModel model;
  PruneTrace trace;
};

/// Progressive pruning with residual-ratio model selection.
inline DiscoveryResult discover(const Library& lib, const PrunerConfig& cfg = {}) {
  cfg.validate();
  if (lib.cols() == 0) throw ConfigError("discover: empty library");
  const SubsetSolver solver(lib.matrix, lib.target);

  PruneTrace trace;
  trace.tau = cfg.tau;
  std::vector<std::size_t> all(lib.cols());
  std::iota(all.begin(), all.end(), std::size_t{0});
  trace.iterations.push_back(detail::evaluate(lib, solver, std::move(all), cfg));

  std::optional<std::size_t> triggered;
  while (trace.iterations.back().active.size() > cfg.min_terms) {
    auto step = prune_step(lib, solver, trace.iterations.back(), cfg);
    trace.iterations.back().removed = step.removed;
    trace.iterations.push_back(std::move(step.next));
    const std::size_t k = trace.iterations.size() - 2;
    const double ratio = detail::residual_ratio(trace.iterations[k].residual, trace.iterations[k + 1].residual);
    if (!triggered && ratio > cfg.tau) {
      triggered = k;
      if (!cfg.record_full_trace) break;
    }
  }

  if (triggered) {
    trace.selected_iteration = *triggered;
    trace.selection_rule = "ratio";
  } else {
    trace.selection_rule = "elbow";
    double best = -1.0;
    for (std::size_t k = 0; k + 1 < trace.iterations.size(); ++k) {
      const double r = detail::residual_ratio(trace.iterations[k].residual, trace.iterations[k + 1].residual);
      if (r > best) {
        best = r;
        trace.selected_iteration = k;
      }
    }
  }

  const auto& sel = trace.iterations[trace.selected_iteration];
  DiscoveredModel model;
  model.target_field = lib.target_field;
  model.residual = sel.residual;
  for (std::size_t a = 0; a < sel.active.size(); ++a) {
    model.terms.push_back(lib.terms[sel.active[a]]);
    model.coefficients.push_back(sel.coefficients[a]);
  }
  if (trace.selection_rule == "elbow") model.flags.push_back("elbow-fallback");
  return {std::move(model), std::move(trace)};
}

} // namespace bgsindy

#endif // BGSINDY_PRUNER_HPP
