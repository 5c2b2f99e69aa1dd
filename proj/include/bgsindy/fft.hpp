#ifndef BGSINDY_FFT_HPP
#define BGSINDY_FFT_HPP

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "bgsindy/error.hpp"

namespace bgsindy {

namespace detail {
// FFTW planning is not thread-safe; execution with the new-array interface is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace detail

/// Real-to-complex FFT of a fixed shape (1D or 2D, row-major), unnormalized
/// forward and normalized inverse. Plans use FFTW_ESTIMATE so results are
/// bitwise reproducible from run to run.
class RealFFT {
public:
  explicit RealFFT(std::size_t n) : RealFFT(std::vector<std::size_t>{n}) {}
  RealFFT(std::size_t nx, std::size_t ny) : RealFFT(std::vector<std::size_t>{nx, ny}) {}

  explicit RealFFT(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 2) throw ConfigError("RealFFT supports 1D and 2D");
    real_size_ = 1;
    for (auto n : shape_) real_size_ *= n;
    spectral_size_ = real_size_ / shape_.back() * (shape_.back() / 2 + 1);
    real_buf_ = fftw_alloc_real(real_size_);
    spec_buf_ = fftw_alloc_complex(spectral_size_);
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (shape_.size() == 1) {
      const int n = static_cast<int>(shape_[0]);
      forward_ = fftw_plan_dft_r2c_1d(n, real_buf_, spec_buf_, FFTW_ESTIMATE);
      inverse_ = fftw_plan_dft_c2r_1d(n, spec_buf_, real_buf_, FFTW_ESTIMATE);
    } else {
      const int nx = static_cast<int>(shape_[0]), ny = static_cast<int>(shape_[1]);
      forward_ = fftw_plan_dft_r2c_2d(nx, ny, real_buf_, spec_buf_, FFTW_ESTIMATE);
      inverse_ = fftw_plan_dft_c2r_2d(nx, ny, spec_buf_, real_buf_, FFTW_ESTIMATE);
    }
  }

  RealFFT(const RealFFT&) = delete;
  RealFFT& operator=(const RealFFT&) = delete;

  ~RealFFT() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_buf_);
    fftw_free(spec_buf_);
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t real_size() const { return real_size_; }
  /// Number of stored complex coefficients: nx * (ny/2+1) in 2D, n/2+1 in 1D.
  std::size_t spectral_size() const { return spectral_size_; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) {
    std::copy(in.begin(), in.end(), real_buf_);
    fftw_execute(forward_);
    auto* c = reinterpret_cast<std::complex<double>*>(spec_buf_);
    std::copy(c, c + spectral_size_, out.begin());
  }

  /// Inverse transform including the 1/N normalization.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    auto* c = reinterpret_cast<std::complex<double>*>(spec_buf_);
    std::copy(in.begin(), in.end(), c);
    fftw_execute(inverse_);
    const double scale = 1.0 / static_cast<double>(real_size_);
    for (std::size_t i = 0; i < real_size_; ++i) out[i] = real_buf_[i] * scale;
  }

private:
  std::vector<std::size_t> shape_;
  std::size_t real_size_ = 0;
  std::size_t spectral_size_ = 0;
  double* real_buf_ = nullptr;
  fftw_complex* spec_buf_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

/// Angular wavenumber of FFT bin m on a periodic axis of n points and period L.
/// Bins above n/2 map to negative frequencies; the Nyquist bin (even n) is +n/2.
inline double wavenumber(std::size_t m, std::size_t n, double period) {
  const double two_pi = 6.283185307179586476925286766559;
  const auto mm = static_cast<double>(m <= n / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n));
  return two_pi * mm / period;
}

} // namespace bgsindy

#endif // BGSINDY_FFT_HPP
