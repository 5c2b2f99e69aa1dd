#ifndef BGSINDY_DENOISE_HPP
#define BGSINDY_DENOISE_HPP

#include <algorithm>
#include <cmath>
#include <mutex>
#include <new>
#include <string>
#include <vector>

#include <fftw3.h>

#include "bgsindy/dataset.hpp"
#include "bgsindy/error.hpp"
#include "bgsindy/fft.hpp"

namespace bgsindy {

namespace detail {

class FftwBuffer {
public:
  explicit FftwBuffer(std::size_t n) : data_(fftw_alloc_real(n)) {
    if (!data_) throw std::bad_alloc();
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  ~FftwBuffer() { fftw_free(data_); }
  double* get() const { return data_; }

private:
  double* data_;
};

/// Owns a plan; creation and destruction hold the planner lock.
class FftwPlan {
public:
  template <class Make>
  explicit FftwPlan(Make&& make) {
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = make();
    if (!plan_) throw NumericalError("FFTW could not create a plan");
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  ~FftwPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  fftw_plan get() const { return plan_; }

private:
  fftw_plan plan_ = nullptr;
};

} // namespace detail

struct DctDenoiseResult {
  std::vector<double> values;
  double sigma = 0.0;     ///< estimated noise std in field units
  double threshold = 0.0; ///< applied to orthonormal coefficients
  std::size_t kept = 0;   ///< coefficients above the threshold
};

/// Wavelet-style shrinkage in the cosine basis: the orthonormal DCT-II of one
/// field over all grid axes (space and time) is hard-thresholded at
/// scale * sigma * sqrt(2 ln N), with sigma taken from the median absolute
/// coefficient (divided by 0.6745) of the block holding the upper half of
/// frequencies on every axis.
inline DctDenoiseResult dct_denoise(const Dataset& ds, const std::string& field, double scale = 1.0) {
  if (!(scale >= 0.0)) throw ConfigError("dct threshold scale must be non-negative");
  const auto shape = ds.shape();
  const auto& src = ds.field(field).values;
  const std::size_t total = src.size();
  const int rank = static_cast<int>(shape.size());
  std::vector<int> dims(shape.begin(), shape.end());

  const detail::FftwBuffer buf_owner(total), coef_owner(total);
  double* buf = buf_owner.get();
  double* coef = coef_owner.get();
  std::vector<fftw_r2r_kind> k2(shape.size(), FFTW_REDFT10), k3(shape.size(), FFTW_REDFT01);
  const detail::FftwPlan forward([&] { return fftw_plan_r2r(rank, dims.data(), buf, coef, k2.data(), FFTW_ESTIMATE); });
  const detail::FftwPlan inverse([&] { return fftw_plan_r2r(rank, dims.data(), coef, buf, k3.data(), FFTW_ESTIMATE); });
  std::copy(src.begin(), src.end(), buf);
  fftw_execute(forward.get());

  // FFTW's unnormalized DCT-II scales white noise of std s to s * sqrt(2^rank * N).
  const double norm = std::sqrt(std::pow(2.0, rank) * static_cast<double>(total));
  std::vector<double> high;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    bool upper = true;
    for (std::size_t d = shape.size(); d-- > 0;) {
      upper = upper && rest % shape[d] >= shape[d] / 2;
      rest /= shape[d];
    }
    if (upper) high.push_back(std::abs(coef[flat]) / norm);
  }
  DctDenoiseResult r;
  if (!high.empty()) {
    std::nth_element(high.begin(), high.begin() + static_cast<std::ptrdiff_t>(high.size() / 2), high.end());
    r.sigma = high[high.size() / 2] / 0.6745;
  }
  r.threshold = scale * r.sigma * std::sqrt(2.0 * std::log(static_cast<double>(total)));
  for (std::size_t i = 0; i < total; ++i) {
    if (std::abs(coef[i]) / norm < r.threshold) coef[i] = 0.0;
    else ++r.kept;
  }
  fftw_execute(inverse.get());
  const double inv = 1.0 / (std::pow(2.0, rank) * static_cast<double>(total));
  r.values.assign(buf, buf + total);
  for (double& x : r.values) x *= inv;
  return r;
}

} // namespace bgsindy

#endif // BGSINDY_DENOISE_HPP
