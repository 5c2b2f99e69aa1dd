#ifndef BGSINDY_DIFFERENTIATION_HPP
#define BGSINDY_DIFFERENTIATION_HPP

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bgsindy/dataset.hpp"
#include "bgsindy/fft.hpp"
#include "bgsindy/stencil.hpp"

namespace bgsindy {

enum class DerivativeAxis { x, y, t };
enum class DiffMethod { finite_difference, spectral };

inline std::string to_string(DiffMethod m) {
  return m == DiffMethod::spectral ? "spectral" : "finite-difference";
}

inline DiffMethod diff_method_from_string(std::string_view s) {
  if (s == "spectral") return DiffMethod::spectral;
  if (s == "finite-difference" || s == "fd") return DiffMethod::finite_difference;
  throw ConfigError("unknown differentiation method '" + std::string(s) + "'");
}

struct DerivativeSpec {
  std::string field;
  DerivativeAxis axis = DerivativeAxis::x;
  int order = 1;
  DiffMethod method = DiffMethod::finite_difference;
  int fd_accuracy = 4;
};

/// Mixed spatial partial derivative d^(orders[0]+orders[1]) / dx^orders[0] dy^orders[1].
struct PartialSpec {
  std::string field;
  std::array<int, 2> orders{0, 0};
  DiffMethod method = DiffMethod::finite_difference;
  int fd_accuracy = 4;

  int total_order() const { return orders[0] + orders[1]; }
};

namespace detail {

/// Strided access to the grid lines along one axis (space axes first, time last).
class LineAccess {
public:
  LineAccess(const Dataset& ds, std::span<const double> values, std::size_t axis)
      : values_(values), shape_(ds.shape()), axis_(axis) {
    stride_ = 1;
    for (std::size_t d = shape_.size(); d-- > axis + 1;) stride_ *= shape_[d];
  }
  std::size_t length() const { return shape_[axis_]; }
  std::size_t stride() const { return stride_; }
  /// Base flat index of the line through `flat` (axis index zeroed).
  std::size_t base(std::size_t flat) const {
    const std::size_t i = (flat / stride_) % shape_[axis_];
    return flat - i * stride_;
  }
  std::size_t position(std::size_t flat) const { return (flat / stride_) % shape_[axis_]; }
  double operator()(std::size_t base, std::size_t j) const { return values_[base + j * stride_]; }

private:
  std::span<const double> values_;
  std::vector<std::size_t> shape_;
  std::size_t axis_;
  std::size_t stride_ = 1;
};

inline bool field_is_periodic(const Dataset& ds, const std::string& field) {
  return ds.field(field).boundary == BoundaryKind::periodic;
}

/// FD derivative of `values` along one axis at the listed flat indices.
inline std::vector<double> fd_along_axis(const Dataset& ds, std::span<const double> values, std::size_t axis,
                                         int order, int accuracy, bool periodic,
                                         std::span<const std::size_t> at) {
  LineAccess line(ds, values, axis);
  const double h = axis < ds.space_dims() ? ds.space_axis(axis).spacing : ds.time_axis().spacing;
  StencilTable table(order, accuracy, line.length(), periodic);
  std::vector<double> out(at.size());
  for (std::size_t k = 0; k < at.size(); ++k) {
    const std::size_t base = line.base(at[k]);
    out[k] = table.apply(line.position(at[k]), h, [&](std::size_t j) { return line(base, j); });
  }
  return out;
}

/// Multiplies a slice spectrum by (i kx)^ax (i ky)^ay, zeroing Nyquist bins
/// of axes differentiated an odd number of times.
inline void apply_spectral_multiplier(std::vector<std::complex<double>>& spec, const Dataset& ds,
                                      std::array<int, 2> orders) {
  const auto& ax = ds.space_axis(0);
  const std::size_t nx = ax.count;
  if (ds.space_dims() == 1) {
    for (std::size_t m = 0; m < spec.size(); ++m) {
      if (orders[0] % 2 == 1 && nx % 2 == 0 && m == nx / 2) {
        spec[m] = 0.0;
        continue;
      }
      spec[m] *= std::pow(std::complex<double>(0.0, wavenumber(m, nx, ax.period())), orders[0]);
    }
    return;
  }
  const auto& ay = ds.space_axis(1);
  const std::size_t ny = ay.count;
  const std::size_t nyc = ny / 2 + 1;
  for (std::size_t mx = 0; mx < nx; ++mx) {
    const bool nyq_x = orders[0] % 2 == 1 && nx % 2 == 0 && mx == nx / 2;
    const auto fx = std::pow(std::complex<double>(0.0, wavenumber(mx, nx, ax.period())), orders[0]);
    for (std::size_t my = 0; my < nyc; ++my) {
      auto& c = spec[mx * nyc + my];
      const bool nyq_y = orders[1] % 2 == 1 && ny % 2 == 0 && my == ny / 2;
      if (nyq_x || nyq_y) {
        c = 0.0;
        continue;
      }
      c *= fx * std::pow(std::complex<double>(0.0, wavenumber(my, ny, ay.period())), orders[1]);
    }
  }
}

inline RealFFT make_slice_fft(const Dataset& ds) {
  std::vector<std::size_t> shape;
  for (const auto& a : ds.space_axes()) shape.push_back(a.count);
  return RealFFT(shape);
}

/// Spectral derivative of one contiguous space slice.
inline void spectral_slice(RealFFT& fft, const Dataset& ds, std::span<const double> slice,
                           std::array<int, 2> orders, std::span<double> out,
                           std::vector<std::complex<double>>& work) {
  work.resize(fft.spectral_size());
  fft.forward(slice, work);
  apply_spectral_multiplier(work, ds, orders);
  fft.inverse(work, out);
}

inline void check_partial(const Dataset& ds, const PartialSpec& p) {
  if (p.orders[0] < 0 || p.orders[1] < 0 || p.total_order() < 1)
    throw ConfigError("derivative order must be >= 1");
  if (p.total_order() > max_derivative_order) throw ConfigError("derivative order above 10 is not supported");
  if (p.orders[1] > 0 && ds.space_dims() < 2) throw ConfigError("y derivative requested on a 1D dataset");
  if (p.method == DiffMethod::spectral && !field_is_periodic(ds, p.field))
    throw ConfigError("spectral differentiation requires a periodic field ('" + p.field + "')");
}

} // namespace detail

/// Mixed spatial derivative of a field evaluated at the given flat indices.
/// Spectral derivatives are computed slice by slice for the slices touched.
inline std::vector<double> partial_at(const Dataset& ds, const PartialSpec& p, std::span<const std::size_t> at) {
  detail::check_partial(ds, p);
  const auto& values = ds.field(p.field).values;
  const bool periodic = detail::field_is_periodic(ds, p.field);
  std::vector<double> out(at.size());

  if (p.method == DiffMethod::spectral) {
    const std::size_t nt = ds.time_size();
    auto fft = detail::make_slice_fft(ds);
    std::vector<double> slice(ds.space_size()), deriv(ds.space_size());
    std::vector<std::complex<double>> work;
    // Group requested points by time slice.
    std::map<std::size_t, std::vector<std::size_t>> by_slice;
    for (std::size_t k = 0; k < at.size(); ++k) by_slice[at[k] % nt].push_back(k);
    for (const auto& [t, ks] : by_slice) {
      for (std::size_t s = 0; s < slice.size(); ++s) slice[s] = values[ds.flat_index(s, t)];
      detail::spectral_slice(fft, ds, slice, p.orders, deriv, work);
      for (auto k : ks) out[k] = deriv[at[k] / nt];
    }
    return out;
  }

  if (p.orders[0] > 0 && p.orders[1] > 0) {
    // Mixed FD: y-derivative of the x-derivative, evaluated on the y-lines through each point.
    const auto& ay = ds.space_axis(1);
    detail::LineAccess yline(ds, values, 1);
    StencilTable ytable(p.orders[1], p.fd_accuracy, ay.count, periodic);
    const auto ny = static_cast<long>(ay.count);
    std::vector<std::size_t> nodes;
    std::vector<std::size_t> first(at.size() + 1, 0);
    for (std::size_t k = 0; k < at.size(); ++k) {
      const std::size_t base = yline.base(at[k]);
      const std::size_t iy = yline.position(at[k]);
      for (int off : ytable.at(iy).offsets) {
        long j = static_cast<long>(iy) + off;
        if (periodic) j = ((j % ny) + ny) % ny;
        nodes.push_back(base + static_cast<std::size_t>(j) * yline.stride());
      }
      first[k + 1] = nodes.size();
    }
    const auto dx = detail::fd_along_axis(ds, values, 0, p.orders[0], p.fd_accuracy, periodic, nodes);
    for (std::size_t k = 0; k < at.size(); ++k) {
      const auto& st = ytable.at(yline.position(at[k]));
      double acc = 0.0;
      for (std::size_t m = 0; m < st.weights.size(); ++m) acc += st.weights[m] * dx[first[k] + m];
      out[k] = acc / std::pow(ay.spacing, p.orders[1]);
    }
    return out;
  }
  const std::size_t axis = p.orders[0] > 0 ? 0 : 1;
  return detail::fd_along_axis(ds, values, axis, p.orders[axis], p.fd_accuracy, periodic, at);
}

/// Mixed spatial derivative over the whole grid.
inline std::vector<double> partial(const Dataset& ds, const PartialSpec& p) {
  detail::check_partial(ds, p);
  if (p.method == DiffMethod::spectral) {
    const auto& values = ds.field(p.field).values;
    std::vector<double> out(ds.size());
    auto fft = detail::make_slice_fft(ds);
    std::vector<double> slice(ds.space_size()), deriv(ds.space_size());
    std::vector<std::complex<double>> work;
    for (std::size_t t = 0; t < ds.time_size(); ++t) {
      for (std::size_t s = 0; s < slice.size(); ++s) slice[s] = values[ds.flat_index(s, t)];
      detail::spectral_slice(fft, ds, slice, p.orders, deriv, work);
      write_slice(out, ds, t, deriv);
    }
    return out;
  }
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return partial_at(ds, p, all);
}

namespace detail {
inline PartialSpec to_partial(const Dataset& ds, const DerivativeSpec& spec) {
  if (spec.axis == DerivativeAxis::t) throw ConfigError("use time_derivative for the time axis");
  PartialSpec p{spec.field, {0, 0}, spec.method, spec.fd_accuracy};
  const std::size_t d = spec.axis == DerivativeAxis::x ? 0 : 1;
  if (d >= ds.space_dims()) throw ConfigError("y derivative requested on a 1D dataset");
  p.orders[d] = spec.order;
  return p;
}
} // namespace detail

/// Finite-difference derivative along x, y or t. Centred stencils of the given
/// accuracy in the interior, same-accuracy one-sided stencils at non-periodic
/// ends (time is never periodic).
inline std::vector<double> fd_derivative(const Dataset& ds, const DerivativeSpec& spec) {
  check_fd_parameters(spec.order, spec.fd_accuracy);
  const auto& values = ds.field(spec.field).values;
  if (spec.axis == DerivativeAxis::t) {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return detail::fd_along_axis(ds, values, ds.space_dims(), spec.order, spec.fd_accuracy, false, all);
  }
  auto p = detail::to_partial(ds, spec);
  p.method = DiffMethod::finite_difference;
  return partial(ds, p);
}

/// Fourier spectral derivative along x or y; the field must be periodic.
inline std::vector<double> spectral_derivative(const Dataset& ds, const DerivativeSpec& spec) {
  if (spec.order < 1) throw ConfigError("derivative order must be >= 1");
  auto p = detail::to_partial(ds, spec);
  p.method = DiffMethod::spectral;
  return partial(ds, p);
}

/// du/dt at the listed points: centred differences inside, one-sided of the
/// same accuracy at the first and last slices. Accuracy defaults to 2.
inline std::vector<double> time_derivative_at(const Dataset& ds, const std::string& field,
                                              std::span<const std::size_t> at, int accuracy = 2) {
  if (ds.time_size() < Dataset::min_axis_count) throw ConfigError("time derivative needs at least 4 slices");
  return detail::fd_along_axis(ds, ds.field(field).values, ds.space_dims(), 1, accuracy, false, at);
}

inline std::vector<double> time_derivative(const Dataset& ds, const std::string& field, int accuracy = 2) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return time_derivative_at(ds, field, all, accuracy);
}

namespace detail {

/// Weights of the local least-squares polynomial fit of `degree` over the
/// window offsets, evaluated at offset 0.
inline std::vector<double> local_poly_weights(std::span<const int> offsets, int degree) {
  const auto n = static_cast<Eigen::Index>(offsets.size());
  const int d = std::min<int>(degree, static_cast<int>(n) - 1);
  int scale = 1;
  for (int o : offsets) scale = std::max(scale, std::abs(o));
  Eigen::MatrixXd A(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(offsets[static_cast<std::size_t>(i)]) / scale;
    double p = 1.0;
    for (int k = 0; k <= d; ++k, p *= x) A(i, k) = p;
  }
  // Row 0 of the pseudo-inverse picks the fitted constant term.
  Eigen::MatrixXd pinv = A.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(n, n));
  std::vector<double> w(offsets.size());
  for (Eigen::Index i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = pinv(0, i);
  return w;
}

inline std::vector<double> smooth_along_axis(const Dataset& ds, std::span<const double> values, std::size_t axis,
                                             std::size_t window, int degree, bool periodic) {
  LineAccess line(ds, values, axis);
  const std::size_t n = line.length();
  if (window > n) throw ConfigError("smoothing window exceeds axis length");
  const int half = static_cast<int>(window / 2);

  // Precompute weights per position class: interior, and each truncated edge window.
  std::vector<int> central_offsets;
  for (int o = -half; o <= half; ++o) central_offsets.push_back(o);
  const auto central = local_poly_weights(central_offsets, degree);
  std::vector<std::vector<int>> left_offsets, right_offsets;
  std::vector<std::vector<double>> left_w, right_w;
  if (!periodic) {
    for (int i = 0; i < half; ++i) {
      std::vector<int> lo, ro;
      for (int o = -i; o <= half; ++o) lo.push_back(o);
      for (int o = -half; o <= i; ++o) ro.push_back(o);
      left_w.push_back(local_poly_weights(lo, degree));
      right_w.push_back(local_poly_weights(ro, degree));
      left_offsets.push_back(std::move(lo));
      right_offsets.push_back(std::move(ro));
    }
  }

  std::vector<double> out(values.size());
  const std::size_t stride = line.stride();
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    const std::size_t base = line.base(flat);
    const std::size_t i = line.position(flat);
    const std::vector<int>* offs = &central_offsets;
    const std::vector<double>* w = &central;
    if (!periodic) {
      if (i < static_cast<std::size_t>(half)) {
        offs = &left_offsets[i];
        w = &left_w[i];
      } else if (n - 1 - i < static_cast<std::size_t>(half)) {
        offs = &right_offsets[n - 1 - i];
        w = &right_w[n - 1 - i];
      }
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < offs->size(); ++k) {
      long j = static_cast<long>(i) + (*offs)[k];
      if (periodic) j = ((j % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n);
      acc += (*w)[k] * values[base + static_cast<std::size_t>(j) * stride];
    }
    out[flat] = acc;
  }
  return out;
}

} // namespace detail

/// Moving local least-squares polynomial smoothing (Savitzky-Golay style),
/// applied as separable passes along every space axis and then time. Edge
/// windows are truncated on the outside; periodic space axes wrap.
inline std::vector<double> smooth_field(const Dataset& ds, const std::string& field, std::size_t window, int degree) {
  if (window % 2 == 0) throw ConfigError("smoothing window must be odd");
  if (degree < 0 || static_cast<std::size_t>(degree) >= window)
    throw ConfigError("smoothing degree must be below the window length");
  const auto& f = ds.field(field);
  for (std::size_t d = 0; d <= ds.space_dims(); ++d)
    if (window > ds.shape()[d]) throw ConfigError("smoothing window exceeds axis length");
  std::vector<double> values = f.values;
  if (window == 1) return values;
  const bool periodic = f.boundary == BoundaryKind::periodic;
  for (std::size_t d = 0; d < ds.space_dims(); ++d)
    values = detail::smooth_along_axis(ds, values, d, window, degree, periodic);
  return detail::smooth_along_axis(ds, values, ds.space_dims(), window, degree, false);
}

} // namespace bgsindy

#endif // BGSINDY_DIFFERENTIATION_HPP
