#ifndef BGSINDY_TERM_HPP
#define BGSINDY_TERM_HPP

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bgsindy/error.hpp"

namespace bgsindy {

/// The single derivative factor a term may carry: d^(x+y) field / dx^x dy^y.
struct DerivativeFactor {
  std::string field;
  std::array<int, 2> orders{0, 0};

  int order() const { return orders[0] + orders[1]; }
  bool operator==(const DerivativeFactor&) const = default;
};

/// A candidate term: a monomial in the fields times at most one derivative.
/// Only positive powers are stored, so equal terms compare equal.
struct TermDescriptor {
  std::map<std::string, int> powers;
  std::optional<DerivativeFactor> derivative;

  TermDescriptor() = default;
  TermDescriptor(std::map<std::string, int> p, std::optional<DerivativeFactor> d = std::nullopt)
      : powers(std::move(p)), derivative(std::move(d)) {
    std::erase_if(powers, [](const auto& kv) { return kv.second == 0; });
    for (const auto& [name, power] : powers)
      if (power < 0) throw ConfigError("negative power for '" + name + "'");
    if (derivative && derivative->order() < 1) throw ConfigError("derivative factor needs order >= 1");
  }

  int degree() const {
    int d = 0;
    for (const auto& [_, p] : powers) d += p;
    return d;
  }

  int power(const std::string& field) const {
    auto it = powers.find(field);
    return it == powers.end() ? 0 : it->second;
  }

  bool operator==(const TermDescriptor&) const = default;

  /// Canonical total order: pure monomials first (by degree, then higher power of
  /// the alphabetically first field first), then derivative terms grouped by
  /// field, derivative order, x-order descending, then monomial as above.
  std::strong_ordering operator<=>(const TermDescriptor& o) const {
    if (auto c = derivative.has_value() <=> o.derivative.has_value(); c != 0) return c;
    if (derivative) {
      if (auto c = derivative->field <=> o.derivative->field; c != 0) return c;
      if (auto c = derivative->order() <=> o.derivative->order(); c != 0) return c;
      if (auto c = o.derivative->orders[0] <=> derivative->orders[0]; c != 0) return c;
    }
    if (auto c = degree() <=> o.degree(); c != 0) return c;
    std::set<std::string> names;
    for (const auto& [n, _] : powers) names.insert(n);
    for (const auto& [n, _] : o.powers) names.insert(n);
    for (const auto& n : names)
      if (auto c = o.power(n) <=> power(n); c != 0) return c;
    return std::strong_ordering::equal;
  }
};

namespace detail {
inline std::string power_string(const std::string& field, int p) {
  return p == 1 ? field : field + "^" + std::to_string(p);
}
} // namespace detail

/// Human-readable form such as "u u_x", "u^2 u_{xxx}", "v_yy", "v^3" or "1".
inline std::string render_term(const TermDescriptor& t) {
  std::string out;
  for (const auto& [field, p] : t.powers) {
    if (!out.empty()) out += ' ';
    out += detail::power_string(field, p);
  }
  if (t.derivative) {
    std::string sub(static_cast<std::size_t>(t.derivative->orders[0]), 'x');
    sub.append(static_cast<std::size_t>(t.derivative->orders[1]), 'y');
    if (!out.empty()) out += ' ';
    out += t.derivative->field + "_" + (sub.size() > 2 ? "{" + sub + "}" : sub);
  }
  return out.empty() ? "1" : out;
}

inline nlohmann::json term_to_json(const TermDescriptor& t) {
  nlohmann::json j;
  j["name"] = render_term(t);
  j["powers"] = nlohmann::json::object();
  for (const auto& [f, p] : t.powers) j["powers"][f] = p;
  if (t.derivative)
    j["derivative"] = {{"field", t.derivative->field}, {"x", t.derivative->orders[0]}, {"y", t.derivative->orders[1]}};
  else
    j["derivative"] = nullptr;
  return j;
}

inline TermDescriptor term_from_json(const nlohmann::json& j) {
  std::map<std::string, int> powers;
  if (j.contains("powers"))
    for (const auto& [f, p] : j.at("powers").items()) powers[f] = p.get<int>();
  std::optional<DerivativeFactor> d;
  if (j.contains("derivative") && !j.at("derivative").is_null()) {
    const auto& dj = j.at("derivative");
    d = DerivativeFactor{dj.at("field").get<std::string>(), {dj.value("x", 0), dj.value("y", 0)}};
  }
  return TermDescriptor(std::move(powers), std::move(d));
}

} // namespace bgsindy

#endif // BGSINDY_TERM_HPP
