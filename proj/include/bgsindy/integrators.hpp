#ifndef BGSINDY_INTEGRATORS_HPP
#define BGSINDY_INTEGRATORS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "bgsindy/error.hpp"

namespace bgsindy {

/// One classical Runge-Kutta step for y' = f(t, y).
template <class State, class Rhs>
State rk4_step(const State& y, double t, double h, Rhs&& f) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fourth-order exponential time differencing for v' = L v + N(v) with a
/// diagonal (complex) linear operator, after Kassam and Trefethen. The phi
/// functions are means over a full unit circle around each h*L_k, which
/// avoids the cancellation of the closed forms near zero and stays valid for
/// complex L.
class Etdrk4 {
public:
  Etdrk4(const Eigen::ArrayXcd& linear, double h, int contour_points = 64) : h_(h) {
    if (!(h > 0.0)) throw ConfigError("ETDRK4 step must be positive");
    if (contour_points < 8) throw ConfigError("ETDRK4 needs at least 8 contour points");
    const Eigen::Index n = linear.size();
    const Eigen::ArrayXcd hl = h * linear;
    e_ = hl.exp();
    e2_ = (0.5 * hl).exp();
    q_.setZero(n);
    f1_.setZero(n);
    f2_.setZero(n);
    f3_.setZero(n);
    using namespace std::complex_literals;
    for (int j = 1; j <= contour_points; ++j) {
      const std::complex<double> r = std::exp(2i * std::numbers::pi * (j - 0.5) / static_cast<double>(contour_points));
      const Eigen::ArrayXcd lr = hl + r;
      const Eigen::ArrayXcd elr = lr.exp();
      const Eigen::ArrayXcd lr3 = lr * lr * lr;
      q_ += ((0.5 * lr).exp() - 1.0) / lr;
      f1_ += (-4.0 - lr + elr * (4.0 - 3.0 * lr + lr * lr)) / lr3;
      f2_ += (2.0 + lr + elr * (lr - 2.0)) / lr3;
      f3_ += (-4.0 - 3.0 * lr - lr * lr + elr * (4.0 - lr)) / lr3;
    }
    const double scale = h / static_cast<double>(contour_points);
    q_ *= scale;
    f1_ *= scale;
    f2_ *= scale;
    f3_ *= scale;
  }

  double step_size() const { return h_; }

  /// Advances v by one step; `nonlinear(v)` returns N(v) in the same space.
  template <class Nonlinear>
  void step(Eigen::ArrayXcd& v, Nonlinear&& nonlinear) const {
    const Eigen::ArrayXcd nv = nonlinear(v);
    const Eigen::ArrayXcd a = e2_ * v + q_ * nv;
    const Eigen::ArrayXcd na = nonlinear(a);
    const Eigen::ArrayXcd b = e2_ * v + q_ * na;
    const Eigen::ArrayXcd nb = nonlinear(b);
    const Eigen::ArrayXcd c = e2_ * a + q_ * (2.0 * nb - nv);
    const Eigen::ArrayXcd nc = nonlinear(c);
    v = e_ * v + nv * f1_ + 2.0 * (na + nb) * f2_ + nc * f3_;
  }

private:
  double h_;
  Eigen::ArrayXcd e_, e2_, q_, f1_, f2_, f3_;
};

struct AdaptiveOptions {
  double atol = 1e-8;
  double rtol = 1e-6;
  double initial_step = 1e-3;
  double min_step = 1e-12;
  std::size_t max_steps = 1'000'000;
};

struct AdaptiveStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Dormand-Prince 5(4) with an RMS error norm scaled by atol + rtol*max(|y|,|y_new|).
/// Integrates y from t0 to exactly t1; `h` carries the step size between calls.
template <class Rhs>
void dopri45(Eigen::ArrayXd& y, double t0, double t1, Rhs&& f, const AdaptiveOptions& opt, double& h,
             AdaptiveStats* stats = nullptr) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat for the embedded 4th-order solution.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (!(t1 >= t0)) throw ConfigError("dopri45: t1 before t0");
  if (!(h > 0.0)) h = opt.initial_step;
  double t = t0;
  Eigen::ArrayXd k1 = f(t, y);
  std::size_t steps = 0;
  while (t < t1) {
    if (++steps > opt.max_steps) throw NumericalError("dopri45: step budget exhausted");
    bool last = false;
    double hs = h;
    if (t + hs >= t1 || t1 - (t + hs) < 1e-12 * std::max(1.0, std::abs(t1))) {
      hs = t1 - t;
      last = true;
    }
    const Eigen::ArrayXd k2 = f(t + c2 * hs, y + hs * (a21 * k1));
    const Eigen::ArrayXd k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    const Eigen::ArrayXd k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::ArrayXd k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::ArrayXd k6 = f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Eigen::ArrayXd ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::ArrayXd k7 = f(t + hs, ynew);
    const Eigen::ArrayXd err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const Eigen::ArrayXd sc = opt.atol + opt.rtol * y.abs().max(ynew.abs());
    const double en = std::sqrt((err / sc).square().mean());
    if (!std::isfinite(en)) throw NumericalError("dopri45: non-finite error estimate");

    if (en <= 1.0) {
      t = last ? t1 : t + hs;
      y = std::move(ynew);
      k1 = k7;
      if (stats) ++stats->accepted;
      const double factor = en == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 10.0);
      // A step shortened to hit t1 says little about the natural step size.
      if (!last || hs >= h) h = hs * factor;
    } else {
      if (stats) ++stats->rejected;
      h = hs * std::max(0.2, 0.9 * std::pow(en, -0.2));
      if (h < opt.min_step) throw NumericalError("dopri45: step size underflow (tolerance failure)");
    }
  }
}

} // namespace bgsindy

#endif // BGSINDY_INTEGRATORS_HPP
