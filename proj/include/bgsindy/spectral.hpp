#ifndef BGSINDY_SPECTRAL_HPP
#define BGSINDY_SPECTRAL_HPP

#include <array>
#include <complex>
#include <cstdlib>
#include <vector>

#include <Eigen/Dense>

#include "bgsindy/dataset.hpp"
#include "bgsindy/error.hpp"
#include "bgsindy/fft.hpp"

namespace bgsindy {

/// Fourier pseudo-spectral operators on a periodic 1D or 2D grid, in the
/// half-spectrum layout of RealFFT.
class SpectralGrid {
public:
  explicit SpectralGrid(const std::vector<Axis>& axes) : fft_(counts_of(axes)) {
    for (const auto& a : axes) {
      counts_.push_back(a.count);
      periods_.push_back(a.period());
    }
  }

  std::size_t dims() const { return counts_.size(); }
  std::size_t real_size() const { return fft_.real_size(); }
  std::size_t spectral_size() const { return fft_.spectral_size(); }

  Eigen::ArrayXcd forward(const Eigen::ArrayXd& u) {
    Eigen::ArrayXcd out(static_cast<Eigen::Index>(spectral_size()));
    fft_.forward({u.data(), static_cast<std::size_t>(u.size())}, {out.data(), spectral_size()});
    return out;
  }

  Eigen::ArrayXd inverse(const Eigen::ArrayXcd& c) {
    Eigen::ArrayXd out(static_cast<Eigen::Index>(real_size()));
    fft_.inverse({c.data(), spectral_size()}, {out.data(), real_size()});
    return out;
  }

  /// Symbol of d^ax/dx^ax d^ay/dy^ay: (i kx)^ax (i ky)^ay, with Nyquist bins
  /// of odd-order axes set to zero.
  Eigen::ArrayXcd derivative_symbol(std::array<int, 2> orders) const {
    Eigen::ArrayXcd s(static_cast<Eigen::Index>(spectral_size()));
    for_each_mode([&](std::size_t flat, std::array<long, 2> m) {
      std::complex<double> v = 1.0;
      for (std::size_t d = 0; d < dims(); ++d) {
        const auto n = static_cast<long>(counts_[d]);
        if (orders[d] % 2 == 1 && n % 2 == 0 && std::abs(m[d]) == n / 2) {
          v = 0.0;
          break;
        }
        const double k = 2.0 * 3.14159265358979323846 * static_cast<double>(m[d]) / periods_[d];
        v *= std::pow(std::complex<double>(0.0, k), orders[d]);
      }
      s(static_cast<Eigen::Index>(flat)) = v;
    });
    return s;
  }

  /// 2/3-rule mask: keeps modes with 3|m| < n on every axis.
  Eigen::ArrayXd dealias_mask() const {
    Eigen::ArrayXd mask(static_cast<Eigen::Index>(spectral_size()));
    for_each_mode([&](std::size_t flat, std::array<long, 2> m) {
      bool keep = true;
      for (std::size_t d = 0; d < dims(); ++d) keep = keep && 3 * std::abs(m[d]) < static_cast<long>(counts_[d]);
      mask(static_cast<Eigen::Index>(flat)) = keep ? 1.0 : 0.0;
    });
    return mask;
  }

  /// Physical-space derivative of a real grid function.
  Eigen::ArrayXd derivative(const Eigen::ArrayXd& u, std::array<int, 2> orders) {
    return inverse(forward(u) * derivative_symbol(orders));
  }

private:
  static std::vector<std::size_t> counts_of(const std::vector<Axis>& axes) {
    if (axes.empty() || axes.size() > 2) throw ConfigError("spectral grid needs one or two axes");
    std::vector<std::size_t> c;
    for (const auto& a : axes) c.push_back(a.count);
    return c;
  }

  static long signed_index(std::size_t m, std::size_t n) {
    return m <= n / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
  }

  template <class F>
  void for_each_mode(F&& f) const {
    if (dims() == 1) {
      for (std::size_t m = 0; m < spectral_size(); ++m) f(m, {signed_index(m, counts_[0]), 0});
      return;
    }
    const std::size_t nyc = counts_[1] / 2 + 1;
    for (std::size_t mx = 0; mx < counts_[0]; ++mx)
      for (std::size_t my = 0; my < nyc; ++my)
        f(mx * nyc + my, {signed_index(mx, counts_[0]), static_cast<long>(my)});
  }

  RealFFT fft_;
  std::vector<std::size_t> counts_;
  std::vector<double> periods_;
};

} // namespace bgsindy

#endif // BGSINDY_SPECTRAL_HPP
