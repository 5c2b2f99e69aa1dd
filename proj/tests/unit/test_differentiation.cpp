#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace bgsindy;
using bgsindy::testing::make_dataset_1d;
using bgsindy::testing::make_dataset_2d;
using bgsindy::testing::max_abs_diff;

namespace {

constexpr double pi = std::numbers::pi;

DerivativeSpec spec_for(int order, DiffMethod method = DiffMethod::finite_difference, int accuracy = 4,
                        DerivativeAxis axis = DerivativeAxis::x) {
  DerivativeSpec s;
  s.field = "u";
  s.order = order;
  s.method = method;
  s.fd_accuracy = accuracy;
  s.axis = axis;
  return s;
}

} // namespace

TEST(Fornberg, CentralFirstDerivativeWeights) {
  const std::vector<double> nodes{-1.0, 0.0, 1.0};
  const auto w = fornberg_weights(0.0, nodes, 1);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_NEAR(w[0], -0.5, 1e-15);
  EXPECT_NEAR(w[1], 0.0, 1e-15);
  EXPECT_NEAR(w[2], 0.5, 1e-15);
  // Five-point second derivative: (-1, 16, -30, 16, -1) / 12.
  const std::vector<double> five{-2.0, -1.0, 0.0, 1.0, 2.0};
  const auto w2 = fornberg_weights(0.0, five, 2);
  const double expect[] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(w2[k], expect[k], 1e-13);
}

TEST(FdDerivative, ConstantGivesZero) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 0.1, 30}, Axis{0.0, 0.1, 5}, [](double, double) { return 3.7; },
                                     BoundaryKind::dirichlet_homogeneous);
  for (int q = 1; q <= 6; ++q) {
    const auto d = fd_derivative(ds, spec_for(q));
    for (double v : d) EXPECT_NEAR(v, 0.0, 1e-9 * std::pow(10.0, q)) << "q=" << q;
  }
}

TEST(FdDerivative, CubicSecondDerivativeIsExact) {
  const Axis x{-1.0, 0.01, 201};
  const Dataset ds =
      make_dataset_1d(x, Axis{0.0, 1.0, 4}, [](double xv, double) { return xv * xv * xv; }, BoundaryKind::dirichlet_homogeneous);
  const auto d = fd_derivative(ds, spec_for(2));
  for (std::size_t i = 0; i < x.count; ++i) EXPECT_NEAR(d[ds.flat_index(i, 2)], 6.0 * x.coordinate(i), 1e-8);
}

TEST(FdDerivative, PeriodicSineAccuracyFour) {
  const Axis x{0.0, 2.0 * pi / 256.0, 256};
  const Dataset ds = make_dataset_1d(x, Axis{0.0, 1.0, 4}, [](double xv, double) { return std::sin(xv); });
  const auto d = fd_derivative(ds, spec_for(1));
  double err = 0.0;
  for (std::size_t i = 0; i < x.count; ++i) err = std::max(err, std::abs(d[ds.flat_index(i, 0)] - std::cos(x.coordinate(i))));
  EXPECT_LT(err, 1e-6);
}

TEST(FdDerivative, PolynomialExactnessUpToDegreeQPlusAMinusOne) {
  EXPECT_LT(bgsindy::testing::fd_polynomial_exactness_error(), 1e-7);
}

TEST(FdDerivative, RejectsShortAxesAndBadOrders) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 0.1, 6}, Axis{0.0, 1.0, 4}, [](double x, double) { return x; },
                                     BoundaryKind::dirichlet_homogeneous);
  EXPECT_THROW((void)fd_derivative(ds, spec_for(4, DiffMethod::finite_difference, 4)), ConfigError);
  EXPECT_THROW((void)fd_derivative(ds, spec_for(0)), ConfigError);
  EXPECT_THROW((void)fd_derivative(ds, spec_for(11)), ConfigError);
  EXPECT_THROW((void)fd_derivative(ds, spec_for(1, DiffMethod::finite_difference, 3)), ConfigError);
}

TEST(FdDerivative, WorksAlongYIn2D) {
  const Axis x{0.0, 2.0 * pi / 32.0, 32}, y{0.0, 2.0 * pi / 64.0, 64};
  const Dataset ds = make_dataset_2d(x, y, Axis{0.0, 1.0, 4}, [](double xv, double yv, double) { return std::cos(xv) * std::sin(2.0 * yv); });
  const auto d = fd_derivative(ds, spec_for(1, DiffMethod::finite_difference, 6, DerivativeAxis::y));
  double err = 0.0;
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 0; j < 64; ++j)
      err = std::max(err, std::abs(d[ds.flat_index(i * 64 + j, 1)] - 2.0 * std::cos(x.coordinate(i)) * std::cos(2.0 * y.coordinate(j))));
  EXPECT_LT(err, 1e-5);
}

TEST(SpectralDerivative, EigenfunctionIsExact) {
  const Axis x{0.0, 2.0 * pi / 64.0, 64};
  const Dataset ds = make_dataset_1d(x, Axis{0.0, 1.0, 4}, [](double xv, double) { return std::cos(3 * xv) + std::sin(3 * xv); });
  const auto d = spectral_derivative(ds, spec_for(1, DiffMethod::spectral));
  for (std::size_t i = 0; i < x.count; ++i) {
    const double xv = x.coordinate(i);
    EXPECT_NEAR(d[ds.flat_index(i, 3)], 3.0 * (-std::sin(3 * xv) + std::cos(3 * xv)), 1e-12);
  }
  EXPECT_LT(bgsindy::testing::spectral_eigenfunction_error(), 1e-14);
}

TEST(SpectralDerivative, BurgersInitialConditionFourthDerivative) {
  const Axis x{0.0, 32.0 * pi / 512.0, 512};
  const Dataset ds = make_dataset_1d(x, Axis{0.0, 1.0, 4}, [](double xv, double) { return std::cos(xv / 16.0); });
  const auto d = spectral_derivative(ds, spec_for(4, DiffMethod::spectral));
  const double k4 = std::pow(1.0 / 16.0, 4);
  for (std::size_t i = 0; i < x.count; ++i) EXPECT_NEAR(d[ds.flat_index(i, 0)], k4 * std::cos(x.coordinate(i) / 16.0), 1e-16 * std::pow(16.0, 4) * 10.0);
}

TEST(SpectralDerivative, NyquistModeDroppedForOddOrders) {
  const Axis x{0.0, 1.0, 16};
  // cos(pi * i) is the Nyquist mode on 16 points.
  const Dataset ds = make_dataset_1d(x, Axis{0.0, 1.0, 4}, [](double xv, double) { return std::cos(pi * xv); });
  const auto d1 = spectral_derivative(ds, spec_for(1, DiffMethod::spectral));
  for (double v : d1) EXPECT_NEAR(v, 0.0, 1e-12);
  const auto d2 = spectral_derivative(ds, spec_for(2, DiffMethod::spectral));
  EXPECT_NEAR(d2[ds.flat_index(0, 0)], -pi * pi, 1e-10);
}

TEST(SpectralDerivative, RejectsOrderZeroAndNonPeriodic) {
  const Axis x{0.0, 0.1, 16};
  const Dataset periodic = make_dataset_1d(x, Axis{0.0, 1.0, 4}, [](double xv, double) { return xv; });
  EXPECT_THROW((void)spectral_derivative(periodic, spec_for(0, DiffMethod::spectral)), ConfigError);
  const Dataset walled =
      make_dataset_1d(x, Axis{0.0, 1.0, 4}, [](double xv, double) { return xv; }, BoundaryKind::dirichlet_homogeneous);
  EXPECT_THROW((void)spectral_derivative(walled, spec_for(1, DiffMethod::spectral)), ConfigError);
}

TEST(SpectralDerivative, MixedPartialIn2D) {
  const Axis x{0.0, 2.0 * pi / 16.0, 16}, y{0.0, 2.0 * pi / 24.0, 24};
  const Dataset ds = make_dataset_2d(x, y, Axis{0.0, 1.0, 4}, [](double xv, double yv, double) { return std::sin(2 * xv) * std::cos(3 * yv); });
  PartialSpec p;
  p.field = "u";
  p.orders = {1, 1};
  p.method = DiffMethod::spectral;
  const auto d = partial(ds, p);
  double err = 0.0;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 24; ++j)
      err = std::max(err, std::abs(d[ds.flat_index(i * 24 + j, 0)] + 6.0 * std::cos(2 * x.coordinate(i)) * std::sin(3 * y.coordinate(j))));
  EXPECT_LT(err, 1e-12);
}

TEST(Derivatives, AreLinear) {
  const Axis x{0.0, 2.0 * pi / 64.0, 64}, t{0.0, 0.1, 6};
  auto f = [](double xv, double tv) { return std::sin(xv + tv) + 0.2 * std::cos(3 * xv); };
  auto g = [](double xv, double tv) { return std::exp(std::sin(xv)) * (1.0 + tv); };
  const Dataset df = make_dataset_1d(x, t, f), dg = make_dataset_1d(x, t, g);
  const Dataset dh = make_dataset_1d(x, t, [&](double xv, double tv) { return 2.5 * f(xv, tv) - 0.7 * g(xv, tv); });
  for (auto method : {DiffMethod::finite_difference, DiffMethod::spectral}) {
    const auto a = partial(df, PartialSpec{"u", {2, 0}, method, 4});
    const auto b = partial(dg, PartialSpec{"u", {2, 0}, method, 4});
    const auto c = partial(dh, PartialSpec{"u", {2, 0}, method, 4});
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, std::abs(c[i] - (2.5 * a[i] - 0.7 * b[i])));
    EXPECT_LT(worst, 1e-10);
  }
  const auto ta = time_derivative(df, "u"), tb = time_derivative(dg, "u"), tc = time_derivative(dh, "u");
  for (std::size_t i = 0; i < tc.size(); ++i) EXPECT_NEAR(tc[i], 2.5 * ta[i] - 0.7 * tb[i], 1e-12);
}

TEST(Derivatives, SpectralAndFdAgreeAtFourthOrder) {
  // The gap between the two shrinks like dx^4 on a smooth periodic field.
  auto gap = [](std::size_t n) {
    const Axis x{0.0, 2.0 * pi / static_cast<double>(n), n};
    const Dataset ds = make_dataset_1d(x, Axis{0.0, 1.0, 4}, [](double xv, double) { return std::exp(std::sin(xv)); });
    const auto a = fd_derivative(ds, spec_for(1));
    const auto b = spectral_derivative(ds, spec_for(1, DiffMethod::spectral));
    return max_abs_diff(a, b);
  };
  const double g1 = gap(64), g2 = gap(128);
  EXPECT_LT(g1, 1e-4);
  EXPECT_GT(g1 / g2, 12.0);
}

TEST(TimeDerivative, QuadraticIsExact) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 1.0, 5}, Axis{0.0, 0.1, 20}, [](double x, double t) { return t * t + x; });
  const auto d = time_derivative(ds, "u");
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 20; ++k) EXPECT_NEAR(d[ds.flat_index(i, k)], 2.0 * 0.1 * static_cast<double>(k), 1e-10);
}

TEST(TimeDerivative, ConstantIsZeroAndShortAxesFail) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 1.0, 5}, Axis{0.0, 0.1, 6}, [](double x, double) { return std::sin(x); });
  for (double v : time_derivative(ds, "u")) EXPECT_NEAR(v, 0.0, 1e-12);
  // The dataset type already rejects fewer than four slices.
  EXPECT_THROW(make_dataset_1d(Axis{0.0, 1.0, 5}, Axis{0.0, 0.1, 1}, [](double, double) { return 0.0; }), ConfigError);
}

TEST(SmoothField, ReproducesPolynomialsOfTheFitDegree) {
  const Dataset ds = make_dataset_1d(Axis{-1.0, 0.05, 41}, Axis{0.0, 0.1, 30},
                                     [](double x, double t) { return 1.0 + 2.0 * x - x * x * x + 0.5 * t * t * x; },
                                     BoundaryKind::dirichlet_homogeneous);
  const auto s = smooth_field(ds, "u", 9, 3);
  EXPECT_LT(max_abs_diff(s, ds.field("u").values), 1e-11);
}

TEST(SmoothField, ReducesWhiteNoise) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  Dataset ds({Axis{0.0, 1.0, 200}}, Axis{0.0, 1.0, 200});
  std::vector<double> v(ds.size());
  for (double& x : v) x = nd(rng);
  ds.add_field("u", BoundaryKind::dirichlet_homogeneous, v);
  const auto s = smooth_field(ds, "u", 11, 3);
  EXPECT_LT(population_std(s), 0.7 * population_std(v));
}

TEST(SmoothField, WindowOneIsIdentityAndBadWindowsFail) {
  const Dataset ds = make_dataset_1d(Axis{0.0, 1.0, 8}, Axis{0.0, 1.0, 6}, [](double x, double t) { return std::sin(x * t); });
  EXPECT_EQ(smooth_field(ds, "u", 1, 0), ds.field("u").values);
  EXPECT_THROW((void)smooth_field(ds, "u", 9, 2), ConfigError);
  EXPECT_THROW((void)smooth_field(ds, "u", 4, 2), ConfigError);
  EXPECT_THROW((void)smooth_field(ds, "u", 5, 5), ConfigError);
}
