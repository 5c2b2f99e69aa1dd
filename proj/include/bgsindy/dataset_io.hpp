#ifndef BGSINDY_DATASET_IO_HPP
#define BGSINDY_DATASET_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "bgsindy/dataset.hpp"

namespace bgsindy {

namespace detail {

inline std::filesystem::path dataset_stem(const std::filesystem::path& p) {
  auto stem = p;
  if (stem.extension() == ".json" || stem.extension() == ".bin") stem.replace_extension();
  return stem;
}

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

} // namespace detail

/// Path pair used for a dataset stored under `path` (with or without extension).
inline std::filesystem::path dataset_header_path(const std::filesystem::path& path) {
  auto p = detail::dataset_stem(path);
  p += ".json";
  return p;
}

inline std::filesystem::path dataset_payload_path(const std::filesystem::path& path) {
  auto p = detail::dataset_stem(path);
  p += ".bin";
  return p;
}

/// Saves `<stem>.json` (axes, fields, boundary, metadata) and `<stem>.bin`
/// (every field as little-endian f64, row-major, concatenated in field order).
inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const auto header_path = dataset_header_path(path);
  const auto payload_path = dataset_payload_path(path);
  if (header_path.has_parent_path()) std::filesystem::create_directories(header_path.parent_path());

  json header;
  header["dtype"] = "f64le";
  header["order"] = "row-major";
  header["payload"] = payload_path.filename().string();
  json space = json::array();
  for (const auto& a : ds.space_axes()) space.push_back(axis_to_json(a));
  header["axes"] = {{"space", space}, {"time", axis_to_json(ds.time_axis())}};
  json fields = json::array();
  json boundary = json::object();
  std::uint64_t offset = 0;
  for (const auto& f : ds.fields()) {
    for (double x : f.values)
      if (!std::isfinite(x)) throw NumericalError("refusing to save non-finite values in '" + f.name + "'");
    fields.push_back({{"name", f.name}, {"shape", ds.shape()}, {"offset", offset}});
    boundary[f.name] = to_string(f.boundary);
    offset += f.values.size() * sizeof(double);
  }
  header["fields"] = fields;
  header["boundary"] = boundary;
  header["metadata"] = ds.metadata();

  std::ofstream bin(payload_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw ConfigError("cannot write " + payload_path.string());
  std::vector<char> buf;
  for (const auto& f : ds.fields()) {
    buf.resize(f.values.size() * sizeof(double));
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const auto bits = detail::to_le(std::bit_cast<std::uint64_t>(f.values[i]));
      std::memcpy(buf.data() + i * sizeof(double), &bits, sizeof(bits));
    }
    bin.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!bin) throw ConfigError("failed writing " + payload_path.string());

  std::ofstream hdr(header_path, std::ios::trunc);
  if (!hdr) throw ConfigError("cannot write " + header_path.string());
  hdr << header.dump(2) << '\n';
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  const auto header_path = dataset_header_path(path);
  std::ifstream hdr(header_path);
  if (!hdr) throw ConfigError("cannot read " + header_path.string());
  json header;
  try {
    header = json::parse(hdr);
  } catch (const json::exception& e) {
    throw ConfigError("malformed dataset header " + header_path.string() + ": " + e.what());
  }

  try {
    if (header.at("dtype") != "f64le" || header.at("order") != "row-major")
      throw ConfigError("unsupported dtype/order in " + header_path.string());
    std::vector<Axis> space;
    for (const auto& a : header.at("axes").at("space")) space.push_back(axis_from_json(a));
    Dataset ds(std::move(space), axis_from_json(header.at("axes").at("time")),
               header.value("metadata", json::object()));

    auto payload_path = header_path.parent_path() / header.value("payload", dataset_payload_path(path).filename().string());
    std::ifstream bin(payload_path, std::ios::binary);
    if (!bin) throw ConfigError("cannot read " + payload_path.string());
    bin.seekg(0, std::ios::end);
    const auto payload_bytes = static_cast<std::uint64_t>(bin.tellg());

    const auto expected_shape = ds.shape();
    const std::uint64_t field_bytes = ds.size() * sizeof(double);
    std::vector<char> buf(field_bytes);
    for (const auto& f : header.at("fields")) {
      const auto name = f.at("name").get<std::string>();
      if (f.at("shape").get<std::vector<std::size_t>>() != expected_shape)
        throw ConfigError("shape mismatch for field '" + name + "'");
      const auto offset = f.at("offset").get<std::uint64_t>();
      if (offset + field_bytes > payload_bytes)
        throw ConfigError("shape mismatch: payload too short for field '" + name + "' (" +
                          std::to_string(payload_bytes) + " bytes, need " +
                          std::to_string(offset + field_bytes) + ")");
      bin.seekg(static_cast<std::streamoff>(offset));
      bin.read(buf.data(), static_cast<std::streamsize>(field_bytes));
      if (!bin) throw ConfigError("failed reading payload for '" + name + "'");
      std::vector<double> values(ds.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, buf.data() + i * sizeof(double), sizeof(bits));
        values[i] = std::bit_cast<double>(detail::to_le(bits));
      }
      const auto bkind = boundary_from_string(header.at("boundary").at(name).get<std::string>());
      ds.add_field(name, bkind, std::move(values));
    }
    return ds;
  } catch (const json::exception& e) {
    throw ConfigError("malformed dataset header " + header_path.string() + ": " + e.what());
  }
}

} // namespace bgsindy

#endif // BGSINDY_DATASET_IO_HPP
