#ifndef BGSINDY_MODEL_HPP
#define BGSINDY_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bgsindy/term.hpp"

namespace bgsindy {

/// Active terms with fitted coefficients: d(target)/dt = sum_j coefficients[j] * terms[j].
struct DiscoveredModel {
  std::vector<TermDescriptor> terms;
  std::vector<double> coefficients;
  std::string target_field;
  double residual = 0.0;
  /// Free-form notes, e.g. "all-terms-eliminated" from a thresholding baseline.
  std::vector<std::string> flags;

  std::size_t size() const { return terms.size(); }
  bool empty() const { return terms.empty(); }

  std::optional<double> coefficient(const TermDescriptor& t) const {
    for (std::size_t j = 0; j < terms.size(); ++j)
      if (terms[j] == t) return coefficients[j];
    return std::nullopt;
  }

  void validate() const {
    if (terms.size() != coefficients.size()) throw ConfigError("model: terms and coefficients differ in length");
    for (std::size_t a = 0; a < terms.size(); ++a)
      for (std::size_t b = a + 1; b < terms.size(); ++b)
        if (terms[a] == terms[b]) throw ConfigError("model: duplicate term " + render_term(terms[a]));
    if (!(residual >= 0.0)) throw ConfigError("model: residual must be non-negative");
  }

  /// Equation string, e.g. "u_t = -1 u u_x - 0.000484 u_{xxx}".
  std::string equation(int precision = 6) const {
    std::ostringstream os;
    os << target_field << "_t =";
    if (terms.empty()) os << " 0";
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const double c = coefficients[j];
      os << (j == 0 ? (c < 0 ? " -" : " ") : (c < 0 ? " - " : " + "));
      os << std::setprecision(precision) << std::abs(c) << ' ' << render_term(terms[j]);
    }
    return os.str();
  }
};

inline nlohmann::json model_to_json(const DiscoveredModel& m) {
  nlohmann::json j;
  j["target_field"] = m.target_field;
  j["residual"] = m.residual;
  j["equation"] = m.equation();
  j["flags"] = m.flags;
  j["terms"] = nlohmann::json::array();
  for (std::size_t k = 0; k < m.terms.size(); ++k) {
    auto t = term_to_json(m.terms[k]);
    t["coefficient"] = m.coefficients[k];
    j["terms"].push_back(std::move(t));
  }
  return j;
}

inline DiscoveredModel model_from_json(const nlohmann::json& j) {
  DiscoveredModel m;
  try {
    m.target_field = j.at("target_field").get<std::string>();
    m.residual = j.value("residual", 0.0);
    if (j.contains("flags")) m.flags = j.at("flags").get<std::vector<std::string>>();
    for (const auto& t : j.at("terms")) {
      m.terms.push_back(term_from_json(t));
      m.coefficients.push_back(t.at("coefficient").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model JSON: ") + e.what());
  }
  m.validate();
  return m;
}

/// One pruning iteration: the fit on the current active set, its term
/// importances, and the term removed to reach the next iteration.
struct PruneIteration {
  std::vector<std::size_t> active;  ///< library column indices
  std::vector<double> coefficients; ///< one per active column
  std::vector<double> importance;   ///< global importance W_j per active column
  std::optional<std::size_t> removed;
  double residual = 0.0;
};

struct PruneTrace {
  std::vector<PruneIteration> iterations;
  std::size_t selected_iteration = 0;
  /// "ratio" when the residual-ratio rule fired, "elbow" when it never did.
  std::string selection_rule = "ratio";
  double tau = 3.0;
};

inline nlohmann::json trace_to_json(const PruneTrace& tr, const std::vector<TermDescriptor>& terms) {
  nlohmann::json j;
  j["selected_iteration"] = tr.selected_iteration;
  j["selection_rule"] = tr.selection_rule;
  j["tau"] = tr.tau;
  j["library"] = nlohmann::json::array();
  for (const auto& t : terms) j["library"].push_back(render_term(t));
  j["iterations"] = nlohmann::json::array();
  for (std::size_t k = 0; k < tr.iterations.size(); ++k) {
    const auto& it = tr.iterations[k];
    nlohmann::json ij;
    ij["iteration"] = k;
    ij["residual"] = it.residual;
    ij["active"] = nlohmann::json::array();
    for (std::size_t a = 0; a < it.active.size(); ++a) {
      nlohmann::json e;
      e["term"] = render_term(terms[it.active[a]]);
      e["index"] = it.active[a];
      e["coefficient"] = it.coefficients[a];
      if (a < it.importance.size()) e["importance"] = it.importance[a];
      ij["active"].push_back(std::move(e));
    }
    ij["removed"] = it.removed ? nlohmann::json(render_term(terms[*it.removed])) : nlohmann::json(nullptr);
    if (k > 0 && tr.iterations[k - 1].residual > 0.0)
      ij["residual_ratio"] = it.residual / tr.iterations[k - 1].residual;
    j["iterations"].push_back(std::move(ij));
  }
  return j;
}

/// One row per iteration: iteration, active count, residual, removed term,
/// then the importance of every library term (empty once pruned).
inline void write_trace_csv(std::ostream& os, const PruneTrace& tr, const std::vector<TermDescriptor>& terms) {
  os << "iteration,n_active,residual,removed,selected";
  for (const auto& t : terms) os << ",\"W[" << render_term(t) << "]\"";
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t k = 0; k < tr.iterations.size(); ++k) {
    const auto& it = tr.iterations[k];
    os << k << ',' << it.active.size() << ',' << it.residual << ",\""
       << (it.removed ? render_term(terms[*it.removed]) : std::string()) << "\","
       << (k == tr.selected_iteration ? 1 : 0);
    std::vector<std::optional<double>> w(terms.size());
    for (std::size_t a = 0; a < it.active.size() && a < it.importance.size(); ++a) w[it.active[a]] = it.importance[a];
    for (const auto& v : w) {
      os << ',';
      if (v) os << *v;
    }
    os << '\n';
  }
}

} // namespace bgsindy

#endif // BGSINDY_MODEL_HPP
