#ifndef BGSINDY_DATASET_HPP
#define BGSINDY_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bgsindy/error.hpp"

namespace bgsindy {

using json = nlohmann::json;

/// Uniform grid axis. Coordinates are origin + i * spacing, i < count.
struct Axis {
  double origin = 0.0;
  double spacing = 1.0;
  std::size_t count = 0;

  double coordinate(std::size_t i) const { return origin + static_cast<double>(i) * spacing; }
  /// Period of the axis when it is treated as periodic (the endpoint is not stored).
  double period() const { return spacing * static_cast<double>(count); }

  bool operator==(const Axis&) const = default;
};

enum class BoundaryKind { periodic, dirichlet_homogeneous };

inline std::string to_string(BoundaryKind b) {
  return b == BoundaryKind::periodic ? "periodic" : "dirichlet-homogeneous";
}

inline BoundaryKind boundary_from_string(std::string_view s) {
  if (s == "periodic") return BoundaryKind::periodic;
  if (s == "dirichlet-homogeneous" || s == "dirichlet") return BoundaryKind::dirichlet_homogeneous;
  throw ConfigError("unknown boundary kind '" + std::string(s) + "'");
}

struct Field {
  std::string name;
  BoundaryKind boundary = BoundaryKind::periodic;
  std::vector<double> values;
};

/// Fields sampled on a uniform space-time grid.
///
/// Layout: each field is a row-major array of shape (nx[, ny], nt), so time is
/// the fastest index: flat = space_index * nt + t, with space_index = ix * ny + iy
/// in two dimensions.
class Dataset {
public:
  static constexpr std::size_t min_axis_count = 4;

  Dataset() = default;

  Dataset(std::vector<Axis> space, Axis time, json metadata = json::object())
      : space_(std::move(space)), time_(time), metadata_(std::move(metadata)) {
    if (space_.empty() || space_.size() > 2)
      throw ConfigError("dataset needs one or two space axes");
    for (const auto& a : space_) check_axis(a, "space");
    check_axis(time_, "time");
    if (!metadata_.is_object()) metadata_ = json::object();
  }

  std::size_t space_dims() const { return space_.size(); }
  const std::vector<Axis>& space_axes() const { return space_; }
  const Axis& space_axis(std::size_t d) const { return space_.at(d); }
  const Axis& time_axis() const { return time_; }

  std::size_t space_size() const {
    std::size_t n = 1;
    for (const auto& a : space_) n *= a.count;
    return n;
  }
  std::size_t time_size() const { return time_.count; }
  std::size_t size() const { return space_size() * time_size(); }

  /// Shape in storage order: space axes then time.
  std::vector<std::size_t> shape() const {
    std::vector<std::size_t> s;
    for (const auto& a : space_) s.push_back(a.count);
    s.push_back(time_.count);
    return s;
  }

  std::size_t flat_index(std::size_t space_index, std::size_t t) const {
    return space_index * time_.count + t;
  }

  /// Splits a flat index into per-axis indices (space axes first, time last).
  std::vector<std::size_t> unravel(std::size_t flat) const {
    auto s = shape();
    std::vector<std::size_t> idx(s.size());
    for (std::size_t d = s.size(); d-- > 0;) {
      idx[d] = flat % s[d];
      flat /= s[d];
    }
    return idx;
  }

  std::size_t ravel(std::span<const std::size_t> idx) const {
    auto s = shape();
    std::size_t flat = 0;
    for (std::size_t d = 0; d < s.size(); ++d) flat = flat * s[d] + idx[d];
    return flat;
  }

  void add_field(std::string name, BoundaryKind boundary, std::vector<double> values) {
    if (has_field(name)) throw ConfigError("duplicate field '" + name + "'");
    check_values(name, values);
    fields_.push_back(Field{std::move(name), boundary, std::move(values)});
  }

  /// Replaces the values of an existing field (same shape required).
  void set_field_values(std::string_view name, std::vector<double> values) {
    auto& f = mutable_field(name);
    check_values(f.name, values);
    f.values = std::move(values);
  }

  bool has_field(std::string_view name) const {
    return std::any_of(fields_.begin(), fields_.end(), [&](const Field& f) { return f.name == name; });
  }

  const Field& field(std::string_view name) const {
    for (const auto& f : fields_)
      if (f.name == name) return f;
    throw ConfigError("unknown field '" + std::string(name) + "'");
  }

  const std::vector<Field>& fields() const { return fields_; }

  std::vector<std::string> field_names() const {
    std::vector<std::string> names;
    for (const auto& f : fields_) names.push_back(f.name);
    return names;
  }

  /// Copies time slice t of a field into a contiguous buffer of space_size().
  std::vector<double> slice(std::string_view name, std::size_t t) const {
    const auto& v = field(name).values;
    std::vector<double> out(space_size());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = v[flat_index(s, t)];
    return out;
  }

  json& metadata() { return metadata_; }
  const json& metadata() const { return metadata_; }

private:
  static void check_axis(const Axis& a, const char* what) {
    if (!(a.spacing > 0.0) || !std::isfinite(a.spacing) || !std::isfinite(a.origin))
      throw ConfigError(std::string(what) + " axis spacing must be positive and finite");
    if (a.count < min_axis_count)
      throw ConfigError(std::string(what) + " axis needs at least 4 points");
  }

  void check_values(const std::string& name, const std::vector<double>& values) const {
    if (values.size() != size())
      throw ConfigError("field '" + name + "' has " + std::to_string(values.size()) +
                        " values, grid expects " + std::to_string(size()));
    for (double x : values)
      if (!std::isfinite(x)) throw NumericalError("field '" + name + "' contains non-finite values");
  }

  Field& mutable_field(std::string_view name) {
    for (auto& f : fields_)
      if (f.name == name) return f;
    throw ConfigError("unknown field '" + std::string(name) + "'");
  }

  std::vector<Axis> space_;
  Axis time_;
  std::vector<Field> fields_;
  json metadata_ = json::object();
};

/// Writes slice t of a field from a contiguous space buffer.
inline void write_slice(std::vector<double>& values, const Dataset& grid, std::size_t t,
                        std::span<const double> slice) {
  for (std::size_t s = 0; s < slice.size(); ++s) values[grid.flat_index(s, t)] = slice[s];
}

inline json axis_to_json(const Axis& a) {
  return {{"origin", a.origin}, {"spacing", a.spacing}, {"count", a.count}};
}

inline Axis axis_from_json(const json& j) {
  return Axis{j.at("origin").get<double>(), j.at("spacing").get<double>(), j.at("count").get<std::size_t>()};
}

} // namespace bgsindy

#endif // BGSINDY_DATASET_HPP
