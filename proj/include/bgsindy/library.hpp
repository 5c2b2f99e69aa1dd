#ifndef BGSINDY_LIBRARY_HPP
#define BGSINDY_LIBRARY_HPP

#include <algorithm>
#include <array>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bgsindy/dataset.hpp"
#include "bgsindy/differentiation.hpp"
#include "bgsindy/sampling.hpp"
#include "bgsindy/term.hpp"

namespace bgsindy {

/// How candidate terms combine monomials and derivatives.
enum class LibraryKind {
  /// {m} and {m * d^q f}: every monomial m times every derivative (1D: (P+1)(Q+1) terms).
  monomial_times_derivative,
  /// {m} and {d^q f}: monomials plus standalone derivatives (the 2D reaction-diffusion library).
  monomial_plus_derivative,
};

struct LibrarySpec {
  LibraryKind kind = LibraryKind::monomial_times_derivative;
  std::vector<std::string> fields{"u"};
  int max_power = 2;
  int max_derivative = 4;
  /// Empty: spectral for periodic fields, finite differences otherwise.
  std::optional<DiffMethod> method;
  int fd_accuracy = 4;
  int time_accuracy = 2;
  double independence_tol = 1e-10;
};

inline nlohmann::json library_spec_to_json(const LibrarySpec& s) {
  nlohmann::json j;
  j["kind"] = s.kind == LibraryKind::monomial_times_derivative ? "monomial-times-derivative" : "monomial-plus-derivative";
  j["fields"] = s.fields;
  j["max_power"] = s.max_power;
  j["max_derivative"] = s.max_derivative;
  j["method"] = s.method ? to_string(*s.method) : "auto";
  j["fd_accuracy"] = s.fd_accuracy;
  j["time_accuracy"] = s.time_accuracy;
  j["independence_tol"] = s.independence_tol;
  return j;
}

inline LibrarySpec library_spec_from_json(const nlohmann::json& j) {
  LibrarySpec s;
  try {
    const auto kind = j.value("kind", std::string("monomial-times-derivative"));
    if (kind == "monomial-times-derivative") s.kind = LibraryKind::monomial_times_derivative;
    else if (kind == "monomial-plus-derivative") s.kind = LibraryKind::monomial_plus_derivative;
    else throw ConfigError("unknown library kind '" + kind + "'");
    if (j.contains("fields")) s.fields = j.at("fields").get<std::vector<std::string>>();
    s.max_power = j.value("max_power", s.max_power);
    s.max_derivative = j.value("max_derivative", s.max_derivative);
    const auto method = j.value("method", std::string("auto"));
    if (method != "auto") s.method = diff_method_from_string(method);
    s.fd_accuracy = j.value("fd_accuracy", s.fd_accuracy);
    s.time_accuracy = j.value("time_accuracy", s.time_accuracy);
    s.independence_tol = j.value("independence_tol", s.independence_tol);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed library spec: ") + e.what());
  }
  if (s.fields.empty()) throw ConfigError("library spec needs at least one field");
  if (s.max_power < 0 || s.max_derivative < 0) throw ConfigError("library bounds must be non-negative");
  return s;
}

namespace detail {

inline void monomials(const std::vector<std::string>& fields, std::size_t from, int budget,
                      std::map<std::string, int>& cur, std::vector<std::map<std::string, int>>& out) {
  if (from == fields.size()) {
    out.push_back(cur);
    return;
  }
  for (int p = 0; p <= budget; ++p) {
    cur[fields[from]] = p;
    monomials(fields, from + 1, budget - p, cur, out);
  }
  cur.erase(fields[from]);
}

inline std::vector<std::array<int, 2>> partial_orders(int q, std::size_t space_dims) {
  std::vector<std::array<int, 2>> out;
  if (space_dims == 1) {
    out.push_back({q, 0});
  } else {
    for (int a = q; a >= 0; --a) out.push_back({a, q - a});
  }
  return out;
}

} // namespace detail

/// Candidate terms of a spec in canonical order (the constant term first).
inline std::vector<TermDescriptor> library_terms(const LibrarySpec& spec, std::size_t space_dims) {
  if (spec.max_derivative > max_derivative_order)
    throw ConfigError("library requests derivatives of order " + std::to_string(spec.max_derivative) +
                      ", supported up to 10");
  std::vector<std::map<std::string, int>> monos;
  std::map<std::string, int> cur;
  detail::monomials(spec.fields, 0, spec.max_power, cur, monos);

  std::vector<TermDescriptor> terms;
  for (const auto& m : monos) terms.emplace_back(m);
  for (const auto& f : spec.fields) {
    for (int q = 1; q <= spec.max_derivative; ++q) {
      for (const auto& orders : detail::partial_orders(q, space_dims)) {
        DerivativeFactor d{f, orders};
        if (spec.kind == LibraryKind::monomial_plus_derivative) {
          terms.emplace_back(std::map<std::string, int>{}, d);
        } else {
          for (const auto& m : monos) terms.emplace_back(m, d);
        }
      }
    }
  }
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  return terms;
}

/// Evaluated candidate library: column j of `matrix` is terms[j] at the samples.
struct Library {
  std::vector<TermDescriptor> terms;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd target;
  std::string target_field;
  SampleSet samples;
  /// Singular values of the column-normalized matrix (descending).
  Eigen::VectorXd singular_values;
  /// Terms removed by reduce_independent.
  std::vector<TermDescriptor> dropped;
  std::vector<std::string> warnings;

  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t cols() const { return terms.size(); }
};

/// Evaluates the candidate terms of `spec` and the time derivative of
/// `target_field` at the sample points.
inline Library build_library(const Dataset& ds, const SampleSet& samples, const LibrarySpec& spec,
                             const std::string& target_field) {
  if (samples.indices.empty()) throw ConfigError("library needs a non-empty sample set");
  for (const auto& f : spec.fields) (void)ds.field(f);
  (void)ds.field(target_field);

  Library lib;
  lib.terms = library_terms(spec, ds.space_dims());
  lib.target_field = target_field;
  lib.samples = samples;
  const auto& idx = samples.indices;
  const auto n = static_cast<Eigen::Index>(idx.size());

  std::map<std::string, Eigen::ArrayXd> values;
  for (const auto& f : spec.fields) {
    const auto& v = ds.field(f).values;
    Eigen::ArrayXd a(n);
    for (Eigen::Index i = 0; i < n; ++i) a(i) = v[idx[static_cast<std::size_t>(i)]];
    values[f] = std::move(a);
  }

  auto method_for = [&](const std::string& f) {
    if (spec.method) return *spec.method;
    return ds.field(f).boundary == BoundaryKind::periodic ? DiffMethod::spectral : DiffMethod::finite_difference;
  };

  std::map<std::pair<std::string, std::array<int, 2>>, Eigen::ArrayXd> derivs;
  for (const auto& t : lib.terms) {
    if (!t.derivative) continue;
    auto key = std::make_pair(t.derivative->field, t.derivative->orders);
    if (derivs.contains(key)) continue;
    PartialSpec p{t.derivative->field, t.derivative->orders, method_for(t.derivative->field), spec.fd_accuracy};
    auto d = partial_at(ds, p, idx);
    derivs[key] = Eigen::Map<const Eigen::ArrayXd>(d.data(), n);
  }

  lib.matrix.resize(n, static_cast<Eigen::Index>(lib.terms.size()));
  for (std::size_t j = 0; j < lib.terms.size(); ++j) {
    const auto& t = lib.terms[j];
    Eigen::ArrayXd col = Eigen::ArrayXd::Ones(n);
    for (const auto& [f, p] : t.powers) col *= values.at(f).pow(p);
    if (t.derivative) col *= derivs.at({t.derivative->field, t.derivative->orders});
    lib.matrix.col(static_cast<Eigen::Index>(j)) = col.matrix();
  }
  if (!lib.matrix.allFinite()) throw NumericalError("library contains non-finite entries");

  const auto ut = time_derivative_at(ds, target_field, idx, spec.time_accuracy);
  lib.target = Eigen::Map<const Eigen::VectorXd>(ut.data(), n);
  return lib;
}

/// Library restricted to the given columns (in the given order).
inline Library select_columns(const Library& lib, const std::vector<std::size_t>& cols) {
  Library out;
  out.target = lib.target;
  out.target_field = lib.target_field;
  out.samples = lib.samples;
  out.matrix.resize(lib.matrix.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.terms.push_back(lib.terms[cols[k]]);
    out.matrix.col(static_cast<Eigen::Index>(k)) = lib.matrix.col(static_cast<Eigen::Index>(cols[k]));
  }
  out.dropped = lib.dropped;
  out.warnings = lib.warnings;
  return out;
}

/// Keeps a maximal linearly independent subset of columns.
///
/// Independence is judged on unit-norm columns with column-pivoted QR: pivots
/// whose |R_kk| falls below tol * |R_00| are dropped. The numerical rank is
/// cross-checked against the singular values of R (those of the normalized
/// matrix); a disagreement is recorded in `warnings`.
inline Library reduce_independent(const Library& lib, double tol = 1e-10) {
  const Eigen::Index m = lib.matrix.cols();
  if (m < 1) throw ConfigError("reduce_independent: empty library");
  Eigen::MatrixXd a = lib.matrix;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double nrm = a.col(j).norm();
    if (nrm > 0.0) a.col(j) /= nrm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(tol);
  const Eigen::Index rank = qr.rank();
  if (rank == 0) throw NumericalError("reduce_independent: every column is numerically zero");

  std::vector<std::size_t> kept;
  for (Eigen::Index k = 0; k < rank; ++k) kept.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()(k)));
  std::sort(kept.begin(), kept.end());

  Library out = select_columns(lib, kept);
  for (std::size_t j = 0; j < lib.terms.size(); ++j)
    if (!std::binary_search(kept.begin(), kept.end(), j)) out.dropped.push_back(lib.terms[j]);

  const Eigen::Index kr = std::min(a.rows(), m);
  Eigen::MatrixXd r = qr.matrixQR().topRows(kr).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  out.singular_values = svd.singularValues();
  Eigen::Index svd_rank = 0;
  const double smax = out.singular_values.size() ? out.singular_values(0) : 0.0;
  for (Eigen::Index k = 0; k < out.singular_values.size(); ++k)
    if (out.singular_values(k) > tol * smax) ++svd_rank;
  if (svd_rank != rank)
    out.warnings.push_back("QR rank " + std::to_string(rank) + " differs from SVD rank " + std::to_string(svd_rank));
  return out;
}

/// CSV with canonical term names as header and one row per sample; the last
/// column is the time-derivative target.
inline void export_library_csv(std::ostream& os, const Library& lib) {
  for (std::size_t j = 0; j < lib.terms.size(); ++j) os << (j ? "," : "") << '"' << render_term(lib.terms[j]) << '"';
  os << ",\"" << lib.target_field << "_t\"\n";
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < lib.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < lib.matrix.cols(); ++j) os << (j ? "," : "") << lib.matrix(i, j);
    os << ',' << lib.target(i) << '\n';
  }
}

} // namespace bgsindy

#endif // BGSINDY_LIBRARY_HPP
