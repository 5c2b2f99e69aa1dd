#ifndef BGSINDY_SAMPLING_HPP
#define BGSINDY_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <string>
#include <vector>

#include "bgsindy/dataset.hpp"

namespace bgsindy {

enum class SampleStrategy { all, uniform_random, latin_hypercube };

inline std::string to_string(SampleStrategy s) {
  switch (s) {
  case SampleStrategy::all: return "all";
  case SampleStrategy::uniform_random: return "uniform-random";
  case SampleStrategy::latin_hypercube: return "latin-hypercube";
  }
  return "all";
}

inline SampleStrategy strategy_from_string(std::string_view s) {
  if (s == "all") return SampleStrategy::all;
  if (s == "uniform-random" || s == "uniform") return SampleStrategy::uniform_random;
  if (s == "latin-hypercube" || s == "lhs") return SampleStrategy::latin_hypercube;
  throw ConfigError("unknown sampling strategy '" + std::string(s) + "'");
}

/// Flat space-time indices into a Dataset, sorted ascending and unique.
struct SampleSet {
  std::vector<std::size_t> indices;
  std::uint64_t seed = 0;
  SampleStrategy strategy = SampleStrategy::all;

  std::size_t size() const { return indices.size(); }
};

namespace detail {

/// Half-open index range [lo, hi) per storage axis (space axes, then time).
using SampleBox = std::vector<std::pair<std::size_t, std::size_t>>;

/// Uniform draw in [0, 1) from the top 53 bits, independent of the standard
/// library's distribution implementations.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Fisher-Yates shuffle driven by unit_draw.
template <class T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = std::min(i - 1, static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(i)));
    std::swap(v[i - 1], v[j]);
  }
}

/// Standard normal draw (Box-Muller, one value per pair of uniforms).
inline double normal_draw(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_draw(rng), u2 = unit_draw(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Latin hypercube over the unit box [0,1)^d of the sample box; the coordinate
// of axis d is snapped to lo_d + floor(x * len_d), i.e. the grid point whose
// cell contains it. Colliding points move to the nearest unused point of the
// box in box-local flat order (+1, -1, +2, ...).
inline std::vector<std::size_t> latin_hypercube(const Dataset& ds, const SampleBox& box, std::size_t n,
                                                std::mt19937_64& rng) {
  const std::size_t dims = box.size();
  std::vector<std::size_t> len(dims);
  std::size_t total = 1;
  for (std::size_t d = 0; d < dims; ++d) {
    len[d] = box[d].second - box[d].first;
    total *= len[d];
  }
  std::vector<std::vector<std::size_t>> strata(dims, std::vector<std::size_t>(n));
  for (auto& perm : strata) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle_in_place(perm, rng);
  }

  std::vector<bool> used(total, false);
  std::vector<std::size_t> out;
  out.reserve(n);
  std::vector<std::size_t> idx(dims);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t local = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double x = (static_cast<double>(strata[d][i]) + unit_draw(rng)) / static_cast<double>(n);
      const auto k = std::min(len[d] - 1, static_cast<std::size_t>(std::floor(x * static_cast<double>(len[d]))));
      local = local * len[d] + k;
    }
    if (used[local]) {
      for (std::size_t step = 1;; ++step) {
        if (local + step < total && !used[local + step]) {
          local += step;
          break;
        }
        if (local >= step && !used[local - step]) {
          local -= step;
          break;
        }
      }
    }
    used[local] = true;
    for (std::size_t d = dims; d-- > 0;) {
      idx[d] = box[d].first + local % len[d];
      local /= len[d];
    }
    out.push_back(ds.ravel(idx));
  }
  return out;
}


/// Sequential selection sampling (Knuth's Algorithm S): n distinct indices
/// of [0, total) in increasing order, each subset equally likely.
inline std::vector<std::size_t> selection_sample(std::size_t total, std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < total && out.size() < n; ++i) {
    const auto remaining = static_cast<double>(total - i);
    const auto needed = static_cast<double>(n - out.size());
    if (remaining * unit_draw(rng) < needed) out.push_back(i);
  }
  return out;
}

} // namespace detail

/// The whole grid as a sample box.
inline detail::SampleBox full_box(const Dataset& ds) {
  detail::SampleBox box;
  for (auto n : ds.shape()) box.emplace_back(0, n);
  return box;
}

/// The grid minus `space_margin` points at both ends of every space axis and
/// `time_margin` slices at both ends of the time axis.
inline detail::SampleBox interior_box(const Dataset& ds, std::size_t space_margin, std::size_t time_margin) {
  auto box = full_box(ds);
  for (std::size_t d = 0; d < box.size(); ++d) {
    const std::size_t m = d + 1 == box.size() ? time_margin : space_margin;
    if (2 * m >= box[d].second) throw ConfigError("sampling margin leaves no interior points");
    box[d] = {m, box[d].second - m};
  }
  return box;
}

/// Chooses n sample points of the dataset grid (or of a sub-box of it),
/// deterministically in `seed`.
inline SampleSet subsample(const Dataset& ds, std::size_t n, SampleStrategy strategy, std::uint64_t seed,
                           const detail::SampleBox& box) {
  if (box.size() != ds.shape().size()) throw ConfigError("sample box rank differs from the dataset");
  std::size_t total = 1;
  for (std::size_t d = 0; d < box.size(); ++d) {
    if (box[d].first >= box[d].second || box[d].second > ds.shape()[d]) throw ConfigError("sample box out of range");
    total *= box[d].second - box[d].first;
  }
  if (n < 1 || n > total)
    throw ConfigError("sample count " + std::to_string(n) + " outside [1, " + std::to_string(total) + "]");
  SampleSet s;
  s.seed = seed;
  s.strategy = strategy;
  std::mt19937_64 rng(seed);

  auto to_flat = [&](std::size_t local) {
    std::vector<std::size_t> idx(box.size());
    for (std::size_t d = box.size(); d-- > 0;) {
      const std::size_t len = box[d].second - box[d].first;
      idx[d] = box[d].first + local % len;
      local /= len;
    }
    return ds.ravel(idx);
  };

  switch (strategy) {
  case SampleStrategy::all:
    if (n != total) throw ConfigError("strategy 'all' requires n equal to the number of eligible points");
    s.indices.resize(total);
    for (std::size_t i = 0; i < total; ++i) s.indices[i] = to_flat(i);
    break;
  case SampleStrategy::uniform_random:
    s.indices = detail::selection_sample(total, n, rng);
    for (auto& i : s.indices) i = to_flat(i);
    break;
  case SampleStrategy::latin_hypercube:
    s.indices = detail::latin_hypercube(ds, box, n, rng);
    break;
  }
  std::sort(s.indices.begin(), s.indices.end());
  return s;
}

inline SampleSet subsample(const Dataset& ds, std::size_t n, SampleStrategy strategy, std::uint64_t seed) {
  return subsample(ds, n, strategy, seed, full_box(ds));
}

/// Population (1/N) standard deviation.
inline double population_std(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

/// Returns a copy with u + gamma * std(u) * N(0,1) added to one field.
inline Dataset add_noise(const Dataset& ds, std::string_view field, double gamma, std::uint64_t seed) {
  if (!(gamma >= 0.0)) throw ConfigError("noise amplitude must be non-negative");
  const auto& f = ds.field(field);
  Dataset out = ds;
  if (gamma == 0.0) return out;
  const double sigma = gamma * population_std(f.values);
  std::mt19937_64 rng(seed);
  auto values = f.values;
  for (double& x : values) x += sigma * detail::normal_draw(rng);
  out.set_field_values(field, std::move(values));
  out.metadata()["noise"][std::string(field)] = {
      {"gamma", gamma}, {"seed", seed}, {"std_convention", "population"}, {"sigma", sigma}};
  return out;
}

} // namespace bgsindy

#endif // BGSINDY_SAMPLING_HPP
