#ifndef BGSINDY_STENCIL_HPP
#define BGSINDY_STENCIL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bgsindy/error.hpp"

namespace bgsindy {

/// Finite-difference weights for the `order`-th derivative at `x0` from the
/// given nodes (Fornberg's recursion). Weights are for unit scaling of the
/// node coordinates, so divide by h^order when the nodes are in grid units.
inline std::vector<double> fornberg_weights(double x0, std::span<const double> nodes, int order) {
  const std::size_t n = nodes.size();
  const auto m = static_cast<std::size_t>(order);
  if (order < 0 || n < m + 1) throw ConfigError("not enough stencil nodes for derivative order");
  // c[j][k]: weight of node j for derivative k.
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k)
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = c[j][m];
  return w;
}

inline constexpr int max_derivative_order = 10;
inline constexpr int max_fd_accuracy = 8;

/// Number of points of the centred stencil for derivative q at even accuracy a.
inline std::size_t central_stencil_size(int q, int accuracy) {
  return static_cast<std::size_t>(2 * ((q + 1) / 2) - 1 + accuracy);
}

/// Number of points of an off-centre stencil with the same accuracy.
inline std::size_t boundary_stencil_size(int q, int accuracy) { return static_cast<std::size_t>(q + accuracy); }

inline void check_fd_parameters(int q, int accuracy) {
  if (q < 1) throw ConfigError("derivative order must be >= 1");
  if (q > max_derivative_order) throw ConfigError("derivative order above 10 is not supported");
  if (accuracy < 2 || accuracy > max_fd_accuracy || accuracy % 2 != 0)
    throw ConfigError("finite-difference accuracy must be an even number in [2, 8], got " + std::to_string(accuracy));
}

/// A stencil in grid units: value = sum_k weights[k] * f[i + offsets[k]] / h^q.
struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

/// Stencil for the q-th derivative at index i on a line of n points.
/// Periodic lines always use the centred stencil (indices wrap); bounded lines
/// shift to an off-centre window of q+accuracy points near the ends.
class StencilTable {
public:
  StencilTable(int q, int accuracy, std::size_t n, bool periodic) : q_(q), n_(n), periodic_(periodic) {
    check_fd_parameters(q, accuracy);
    const std::size_t pc = central_stencil_size(q, accuracy);
    const std::size_t pb = boundary_stencil_size(q, accuracy);
    if (n < (periodic ? pc : pb))
      throw ConfigError("axis of " + std::to_string(n) + " points is too short for a " +
                        std::to_string(periodic ? pc : pb) + "-point stencil");
    half_ = static_cast<int>(pc / 2);
    central_ = make(-half_, pc);
    if (!periodic) {
      // Left edge: windows starting at 0 for points i < half, right edge mirrored.
      for (int i = 0; i < half_; ++i) left_.push_back(make(-i, pb));
      for (int i = 0; i < half_; ++i) right_.push_back(make(-static_cast<int>(pb) + 1 + i, pb));
    }
  }

  int order() const { return q_; }
  int half_width() const { return half_; }
  const Stencil& central() const { return central_; }

  /// Stencil used at index i (offsets relative to i).
  const Stencil& at(std::size_t i) const {
    if (periodic_) return central_;
    const auto ii = static_cast<long>(i);
    if (ii < half_) return left_[static_cast<std::size_t>(ii)];
    const long from_end = static_cast<long>(n_) - 1 - ii;
    if (from_end < half_) return right_[static_cast<std::size_t>(from_end)];
    return central_;
  }

  /// Applies the stencil along a strided line; `h` is the grid spacing.
  template <typename Get>
  double apply(std::size_t i, double h, Get&& get) const {
    const auto& s = at(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < s.offsets.size(); ++k) {
      long j = static_cast<long>(i) + s.offsets[k];
      if (periodic_) {
        const auto n = static_cast<long>(n_);
        j = ((j % n) + n) % n;
      }
      acc += s.weights[k] * get(static_cast<std::size_t>(j));
    }
    return acc / std::pow(h, q_);
  }

private:
  Stencil make(int first, std::size_t count) const {
    Stencil s;
    std::vector<double> nodes(count);
    for (std::size_t k = 0; k < count; ++k) {
      s.offsets.push_back(first + static_cast<int>(k));
      nodes[k] = static_cast<double>(first + static_cast<int>(k));
    }
    s.weights = fornberg_weights(0.0, nodes, q_);
    return s;
  }

  int q_;
  std::size_t n_;
  bool periodic_;
  int half_ = 0;
  Stencil central_;
  std::vector<Stencil> left_;
  std::vector<Stencil> right_;
};

} // namespace bgsindy

#endif // BGSINDY_STENCIL_HPP
