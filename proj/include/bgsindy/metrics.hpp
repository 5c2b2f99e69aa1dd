#ifndef BGSINDY_METRICS_HPP
#define BGSINDY_METRICS_HPP

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "bgsindy/dataset.hpp"
#include "bgsindy/error.hpp"
#include "bgsindy/model.hpp"

namespace bgsindy {

/// Mean of |xi - xi_true| / |xi_true| over the terms present in both models.
inline double coefficient_error(const DiscoveredModel& discovered, const DiscoveredModel& reference) {
  double sum = 0.0;
  std::size_t common = 0;
  for (std::size_t j = 0; j < reference.terms.size(); ++j) {
    const auto c = discovered.coefficient(reference.terms[j]);
    if (!c) continue;
    const double truth = reference.coefficients[j];
    if (truth == 0.0) throw ConfigError("coefficient_error: reference coefficient of " + render_term(reference.terms[j]) + " is zero");
    sum += std::abs(*c - truth) / std::abs(truth);
    ++common;
  }
  if (common == 0) throw ConfigError("coefficient_error: the models share no terms");
  return sum / static_cast<double>(common);
}

/// ||pred - ref|| / ||ref|| over every space-time point of one field.
inline double relative_l2(const Dataset& predicted, const Dataset& reference, const std::string& field) {
  if (predicted.space_axes() != reference.space_axes() || !(predicted.time_axis() == reference.time_axis()))
    throw ConfigError("relative_l2: datasets are on different grids");
  const auto& p = predicted.field(field).values;
  const auto& r = reference.field(field).values;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += (p[i] - r[i]) * (p[i] - r[i]);
    den += r[i] * r[i];
  }
  if (den == 0.0) throw ConfigError("relative_l2: reference field '" + field + "' is identically zero");
  return std::sqrt(num / den);
}

struct TermCoefficient {
  TermDescriptor term;
  double coefficient = 0.0;
};

struct StructureReport {
  bool match = false;
  std::vector<TermCoefficient> missing;  ///< in the reference only, with the reference coefficient
  std::vector<TermCoefficient> spurious; ///< in the discovered model only, with its coefficient
};

inline StructureReport structure_match(const DiscoveredModel& discovered, const DiscoveredModel& reference) {
  StructureReport r;
  for (std::size_t j = 0; j < reference.terms.size(); ++j)
    if (!discovered.coefficient(reference.terms[j])) r.missing.push_back({reference.terms[j], reference.coefficients[j]});
  for (std::size_t j = 0; j < discovered.terms.size(); ++j)
    if (!reference.coefficient(discovered.terms[j])) r.spurious.push_back({discovered.terms[j], discovered.coefficients[j]});
  r.match = r.missing.empty() && r.spurious.empty();
  return r;
}

inline nlohmann::json structure_report_to_json(const StructureReport& r) {
  auto list = [](const std::vector<TermCoefficient>& v) {
    auto a = nlohmann::json::array();
    for (const auto& t : v) {
      auto j = term_to_json(t.term);
      j["coefficient"] = t.coefficient;
      a.push_back(std::move(j));
    }
    return a;
  };
  return {{"match", r.match}, {"missing", list(r.missing)}, {"spurious", list(r.spurious)}};
}

} // namespace bgsindy

#endif // BGSINDY_METRICS_HPP
