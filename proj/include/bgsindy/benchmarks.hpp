#ifndef BGSINDY_BENCHMARKS_HPP
#define BGSINDY_BENCHMARKS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bgsindy/dataset.hpp"
#include "bgsindy/error.hpp"
#include "bgsindy/integrators.hpp"
#include "bgsindy/model.hpp"
#include "bgsindy/spectral.hpp"
#include "bgsindy/term.hpp"

namespace bgsindy {

inline constexpr const char* version_string = "1.0.0";

/// Values above this magnitude are treated as a blown-up simulation.
inline constexpr double blowup_threshold = 1e6;

struct BenchmarkConfig {
  std::string benchmark;
  double epsilon = 0.0;
  std::vector<double> domain_min, domain_max;
  std::vector<std::size_t> grid;
  double t_final = 1.0;
  double output_dt = 0.1;
  /// Fixed step for rk4/etdrk4; initial step for rk45.
  double solver_dt = 0.1;
  std::string integrator;
  bool dealias = true;
  std::string initial_condition;
  double atol = 1e-8;
  double rtol = 1e-6;
  int contour_points = 64;
  /// Extra keys for custom-model runs (model, reference).
  nlohmann::json extra = nlohmann::json::object();

  std::size_t output_count() const { return static_cast<std::size_t>(std::llround(t_final / output_dt)) + 1; }

  std::size_t steps_per_output() const {
    const double r = output_dt / solver_dt;
    const auto s = static_cast<std::size_t>(std::llround(r));
    if (s < 1 || std::abs(r - static_cast<double>(s)) > 1e-9 * r)
      throw ConfigError("output_dt must be a whole multiple of solver_dt");
    return s;
  }

  void validate() const {
    if (benchmark.empty()) throw ConfigError("benchmark id missing");
    if (grid.empty() || grid.size() != domain_min.size() || grid.size() != domain_max.size())
      throw ConfigError("grid and domain dimensions disagree");
    for (std::size_t d = 0; d < grid.size(); ++d) {
      if (grid[d] < Dataset::min_axis_count) throw ConfigError("grid needs at least 4 points per axis");
      if (!(domain_max[d] > domain_min[d])) throw ConfigError("empty domain");
    }
    if (!(t_final > 0.0) || !(output_dt > 0.0) || !(solver_dt > 0.0)) throw ConfigError("times must be positive");
    if (std::abs(t_final / output_dt - std::round(t_final / output_dt)) > 1e-9 * (t_final / output_dt))
      throw ConfigError("t_final must be a whole multiple of output_dt");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
    if (!(atol > 0.0) || !(rtol > 0.0)) throw ConfigError("tolerances must be positive");
    if (integrator != "rk4" && integrator != "etdrk4" && integrator != "rk45")
      throw ConfigError("unknown integrator '" + integrator + "'");
    if (integrator != "rk45") (void)steps_per_output();
  }
};

inline nlohmann::json benchmark_config_to_json(const BenchmarkConfig& c) {
  nlohmann::json j;
  j["benchmark"] = c.benchmark;
  j["epsilon"] = c.epsilon;
  j["domain_min"] = c.domain_min;
  j["domain_max"] = c.domain_max;
  j["grid"] = c.grid;
  j["t_final"] = c.t_final;
  j["output_dt"] = c.output_dt;
  j["solver_dt"] = c.solver_dt;
  j["integrator"] = c.integrator;
  j["dealias"] = c.dealias;
  j["initial_condition"] = c.initial_condition;
  j["atol"] = c.atol;
  j["rtol"] = c.rtol;
  j["contour_points"] = c.contour_points;
  if (!c.extra.empty()) j["extra"] = c.extra;
  return j;
}

/// Published parameters of each benchmark. Burgers defaults to 2048 points;
/// "resolution": "full" in a config selects 4048.
inline BenchmarkConfig default_benchmark_config(const std::string& id) {
  BenchmarkConfig c;
  c.benchmark = id;
  if (id == "kdv") {
    c.epsilon = 4.84e-4;
    c.domain_min = {0.0};
    c.domain_max = {2.0};
    c.grid = {260};
    c.t_final = 3.0;
    c.output_dt = 1e-3;
    c.solver_dt = 2.5e-4;
    c.integrator = "rk4";
    c.dealias = false;
    c.initial_condition = "two-soliton";
  } else if (id == "burgers-hyper") {
    c.epsilon = 1e-3;
    c.domain_min = {0.0};
    c.domain_max = {32.0 * std::numbers::pi};
    c.grid = {2048};
    c.t_final = 100.0;
    c.output_dt = 0.1;
    c.solver_dt = 0.1;
    c.integrator = "etdrk4";
    c.initial_condition = "cos-x-over-16";
  } else if (id == "modified-ks") {
    c.epsilon = 1e-6;
    c.domain_min = {0.0};
    c.domain_max = {22.0};
    c.grid = {128};
    c.t_final = 200.0;
    c.output_dt = 0.004;
    c.solver_dt = 0.004;
    c.integrator = "etdrk4";
    c.initial_condition = "cos3-minus-half-sin1";
  } else if (id == "rd2d") {
    c.epsilon = 1e-3;
    c.domain_min = {-1.5, -1.5};
    c.domain_max = {1.5, 1.5};
    c.grid = {256, 256};
    c.t_final = 5.0;
    c.output_dt = 0.05;
    c.solver_dt = 1e-3;
    c.integrator = "rk45";
    c.dealias = false;
    c.initial_condition = "spiral";
  } else if (id == "custom-model") {
    c.integrator = "etdrk4";
    c.domain_min = {0.0};
    c.domain_max = {1.0};
    c.grid = {16};
  } else {
    throw ConfigError("unknown benchmark '" + id + "'");
  }
  return c;
}

/// Defaults for the named benchmark overlaid with the keys present in `j`.
inline BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j, const std::string& id_override = {}) {
  try {
    const std::string id = !id_override.empty() ? id_override : j.at("benchmark").get<std::string>();
    BenchmarkConfig c = default_benchmark_config(id);
    if (j.value("resolution", std::string()) == "full" && id == "burgers-hyper") c.grid = {4048};
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("domain_min")) c.domain_min = j.at("domain_min").get<std::vector<double>>();
    if (j.contains("domain_max")) c.domain_max = j.at("domain_max").get<std::vector<double>>();
    if (j.contains("grid")) {
      c.grid = j.at("grid").is_array() ? j.at("grid").get<std::vector<std::size_t>>()
                                       : std::vector<std::size_t>(c.grid.size(), j.at("grid").get<std::size_t>());
    }
    c.t_final = j.value("t_final", c.t_final);
    c.output_dt = j.value("output_dt", c.output_dt);
    c.solver_dt = j.value("solver_dt", c.solver_dt);
    c.integrator = j.value("integrator", c.integrator);
    c.dealias = j.value("dealias", c.dealias);
    c.initial_condition = j.value("initial_condition", c.initial_condition);
    c.atol = j.value("atol", c.atol);
    c.rtol = j.value("rtol", c.rtol);
    c.contour_points = j.value("contour_points", c.contour_points);
    if (j.contains("extra")) c.extra = j.at("extra");
    for (const char* k : {"model", "models", "reference"})
      if (j.contains(k)) c.extra[k] = j.at(k);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed benchmark config: ") + e.what());
  }
}

namespace detail {

inline TermDescriptor mono(std::map<std::string, int> p) { return TermDescriptor(std::move(p)); }

inline TermDescriptor with_deriv(std::map<std::string, int> p, const std::string& f, int ox, int oy = 0) {
  return TermDescriptor(std::move(p), DerivativeFactor{f, {ox, oy}});
}

inline DiscoveredModel make_model(const std::string& target, std::vector<std::pair<TermDescriptor, double>> terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  DiscoveredModel m;
  m.target_field = target;
  for (auto& [t, c] : terms) {
    m.terms.push_back(std::move(t));
    m.coefficients.push_back(c);
  }
  return m;
}

} // namespace detail

/// Governing equations of a benchmark in library form, one model per field.
/// Divergence forms are expanded, e.g. d/dx(u^k) -> k u^(k-1) u_x.
inline std::vector<DiscoveredModel> reference_models(const std::string& id, double eps) {
  using detail::mono;
  using detail::with_deriv;
  if (id == "kdv")
    return {detail::make_model("u", {{with_deriv({{"u", 1}}, "u", 1), -1.0}, {with_deriv({}, "u", 3), -eps}})};
  if (id == "burgers-hyper")
    return {detail::make_model("u", {{with_deriv({{"u", 1}}, "u", 1), -1.0},
                                     {with_deriv({}, "u", 2), 0.5},
                                     {with_deriv({}, "u", 4), -eps}})};
  if (id == "modified-ks") {
    std::vector<std::pair<TermDescriptor, double>> t{{with_deriv({{"u", 1}}, "u", 1), -1.0},
                                                      {with_deriv({}, "u", 2), -1.0},
                                                      {with_deriv({}, "u", 4), -1.0}};
    for (int k = 3; k <= 6; ++k) t.push_back({with_deriv({{"u", k - 1}}, "u", 1), -k * eps});
    return {detail::make_model("u", std::move(t))};
  }
  if (id == "rd2d") {
    const double beta = 0.5;
    auto u = detail::make_model("u", {{mono({{"u", 1}}), 1.0},
                                      {mono({{"v", 3}}), beta},
                                      {mono({{"u", 1}, {"v", 2}}), -1.0},
                                      {mono({{"u", 2}, {"v", 1}}), beta},
                                      {mono({{"u", 3}}), -1.0},
                                      {with_deriv({}, "u", 2, 0), eps},
                                      {with_deriv({}, "u", 0, 2), eps}});
    auto v = detail::make_model("v", {{mono({{"v", 1}}), 1.0},
                                      {mono({{"v", 3}}), -1.0},
                                      {mono({{"u", 1}, {"v", 2}}), -beta},
                                      {mono({{"u", 2}, {"v", 1}}), -1.0},
                                      {mono({{"u", 3}}), -beta},
                                      {with_deriv({}, "v", 2, 0), eps},
                                      {with_deriv({}, "v", 0, 2), eps}});
    return {u, v};
  }
  throw ConfigError("no reference model for benchmark '" + id + "'");
}

/// Default discovery settings for a benchmark: library shape, sampling and targets.
inline nlohmann::json default_discovery_spec(const std::string& id) {
  nlohmann::json j;
  j["samples"] = {{"strategy", "uniform-random"}, {"count", 100000}, {"seed", 0}};
  j["fd_accuracy"] = 4;
  j["time_accuracy"] = 2;
  j["method"] = "auto";
  j["independence_tol"] = 1e-10;
  j["tau"] = 3.0;
  j["epsilon_rule"] = "residual";
  j["boundary_margin"] = "auto";
  // The rd2d spiral start is not periodic; its fast initial transient is not
  // resolved at the output interval.
  j["time_margin"] = id == "rd2d" ? 10 : 0;
  if (id == "rd2d") {
    j["kind"] = "monomial-plus-derivative";
    j["fields"] = {"u", "v"};
    j["targets"] = {"u", "v"};
    j["max_power"] = 3;
    j["max_derivative"] = 2;
  } else {
    j["kind"] = "monomial-times-derivative";
    j["fields"] = {"u"};
    j["targets"] = {"u"};
    j["max_power"] = id == "modified-ks" ? 10 : 2;
    j["max_derivative"] = id == "modified-ks" ? 10 : 4;
  }
  return j;
}

namespace detail {

inline std::vector<Axis> benchmark_axes(const BenchmarkConfig& c, bool include_endpoint) {
  std::vector<Axis> axes;
  for (std::size_t d = 0; d < c.grid.size(); ++d) {
    const double len = c.domain_max[d] - c.domain_min[d];
    const double h = include_endpoint ? len / static_cast<double>(c.grid[d] - 1) : len / static_cast<double>(c.grid[d]);
    axes.push_back(Axis{c.domain_min[d], h, c.grid[d]});
  }
  return axes;
}

inline Axis output_time_axis(const BenchmarkConfig& c) { return Axis{0.0, c.output_dt, c.output_count()}; }

inline void check_bounded(const Eigen::ArrayXd& u, double t, const char* what) {
  if (!u.allFinite() || u.abs().maxCoeff() > blowup_threshold)
    throw NumericalError(std::string(what) + ": solution blew up near t = " + std::to_string(t));
}

inline nlohmann::json benchmark_metadata(const BenchmarkConfig& c, const nlohmann::json& stability) {
  nlohmann::json md;
  md["benchmark"] = c.benchmark;
  md["config"] = benchmark_config_to_json(c);
  md["solver_dt"] = c.solver_dt;
  md["dealias"] = c.dealias;
  md["integrator"] = c.integrator;
  md["stability"] = stability;
  md["version"] = version_string;
  md["reference_model"] = nlohmann::json::object();
  for (const auto& m : reference_models(c.benchmark, c.epsilon)) md["reference_model"][m.target_field] = model_to_json(m);
  md["library_spec"] = default_discovery_spec(c.benchmark);
  return md;
}

/// Stores a list of per-output space slices as a dataset field.
inline void add_slices(Dataset& ds, const std::string& name, BoundaryKind b, const std::vector<Eigen::ArrayXd>& slices) {
  std::vector<double> values(ds.size());
  for (std::size_t t = 0; t < slices.size(); ++t)
    write_slice(values, ds, t, {slices[t].data(), static_cast<std::size_t>(slices[t].size())});
  ds.add_field(name, b, std::move(values));
}

/// Runs a scalar periodic ETDRK4 solve; `nonlinear` maps a spectrum to N(v).
template <class Nonlinear>
std::vector<Eigen::ArrayXd> run_etdrk4(SpectralGrid& grid, const Eigen::ArrayXcd& linear, const Eigen::ArrayXd& u0,
                                       const BenchmarkConfig& c, Nonlinear&& nonlinear, const char* what) {
  const Etdrk4 scheme(linear, c.solver_dt, c.contour_points);
  const std::size_t stride = c.steps_per_output(), n_out = c.output_count();
  std::vector<Eigen::ArrayXd> out{u0};
  Eigen::ArrayXcd v = grid.forward(u0);
  for (std::size_t o = 1; o < n_out; ++o) {
    for (std::size_t s = 0; s < stride; ++s) scheme.step(v, nonlinear);
    out.push_back(grid.inverse(v));
    check_bounded(out.back(), static_cast<double>(o) * c.output_dt, what);
  }
  return out;
}

} // namespace detail

/// Two-soliton KdV initial condition on the given grid, with the boundary
/// values set to the Dirichlet value 0.
inline Eigen::ArrayXd kdv_initial_condition(const Axis& x) {
  Eigen::ArrayXd u(static_cast<Eigen::Index>(x.count));
  auto sech2 = [](double z) {
    const double s = 1.0 / std::cosh(z);
    return s * s;
  };
  for (std::size_t i = 0; i < x.count; ++i) {
    const double xi = x.coordinate(i);
    u(static_cast<Eigen::Index>(i)) = 0.9 * sech2(12.45 * (xi - 0.5)) + 0.3 * sech2(7.1875 * (xi - 0.85));
  }
  u(0) = 0.0;
  u(u.size() - 1) = 0.0;
  return u;
}

/// Semi-discrete KdV right-hand side -u u_x - eps u_xxx with fourth-order
/// central differences. The homogeneous Dirichlet walls are imposed through
/// odd-reflection ghost values, which keeps the discrete operator stable.
class KdvOperator {
public:
  KdvOperator(std::size_t n, double h, double eps) : n_(n), h_(h), eps_(eps), ext_(static_cast<Eigen::Index>(n + 6)) {}

  Eigen::ArrayXd operator()(double, const Eigen::ArrayXd& u) const {
    const auto n = static_cast<Eigen::Index>(n_);
    ext_.segment(3, n) = u;
    for (Eigen::Index k = 1; k <= 3; ++k) {
      ext_(3 - k) = -u(k);
      ext_(3 + n - 1 + k) = -u(n - 1 - k);
    }
    Eigen::ArrayXd du = Eigen::ArrayXd::Zero(n);
    const double h3 = h_ * h_ * h_;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const Eigen::Index j = i + 3;
      const double d1 = (-ext_(j + 2) + 8.0 * ext_(j + 1) - 8.0 * ext_(j - 1) + ext_(j - 2)) / (12.0 * h_);
      const double d3 = (-ext_(j + 3) + 8.0 * ext_(j + 2) - 13.0 * ext_(j + 1) + 13.0 * ext_(j - 1) - 8.0 * ext_(j - 2) +
                         ext_(j - 3)) /
                        (8.0 * h3);
      du(i) = -u(i) * d1 - eps_ * d3;
    }
    return du;
  }

private:
  std::size_t n_;
  double h_, eps_;
  mutable Eigen::ArrayXd ext_;
};

inline Dataset solve_kdv(const BenchmarkConfig& c) {
  c.validate();
  if (c.grid.size() != 1) throw ConfigError("kdv is one-dimensional");
  if (c.integrator != "rk4") throw ConfigError("kdv supports the rk4 integrator only");
  const auto axes = detail::benchmark_axes(c, true);
  const KdvOperator rhs(axes[0].count, axes[0].spacing, c.epsilon);
  const std::size_t stride = c.steps_per_output(), n_out = c.output_count();

  std::vector<Eigen::ArrayXd> slices{kdv_initial_condition(axes[0])};
  Eigen::ArrayXd u = slices.front();
  double t = 0.0;
  for (std::size_t o = 1; o < n_out; ++o) {
    for (std::size_t s = 0; s < stride; ++s) {
      u = rk4_step(u, t, c.solver_dt, rhs);
      t += c.solver_dt;
    }
    detail::check_bounded(u, t, "kdv");
    slices.push_back(u);
  }

  // RK4 on the purely dispersive part: stable while |lambda| dt < 2.83.
  const double h = axes[0].spacing;
  const double disp = c.epsilon * (8.0 + 2.0 * 13.0 + 2.0) / (8.0 * h * h * h) * c.solver_dt;
  const double adv = slices.front().abs().maxCoeff() * (16.0 + 2.0) / (12.0 * h) * c.solver_dt;
  nlohmann::json stab = {{"dispersive_lambda_dt_bound", disp}, {"advective_cfl_bound", adv}, {"rk4_imaginary_limit", 2.828}};

  Dataset ds(axes, detail::output_time_axis(c), detail::benchmark_metadata(c, stab));
  detail::add_slices(ds, "u", BoundaryKind::dirichlet_homogeneous, slices);
  return ds;
}

inline Dataset solve_burgers_hyper(const BenchmarkConfig& c) {
  c.validate();
  if (c.grid.size() != 1) throw ConfigError("burgers-hyper is one-dimensional");
  if (c.integrator != "etdrk4") throw ConfigError("burgers-hyper supports the etdrk4 integrator only");
  const auto axes = detail::benchmark_axes(c, false);
  SpectralGrid grid(axes);
  const Eigen::ArrayXcd d1 = grid.derivative_symbol({1, 0});
  const Eigen::ArrayXcd linear = 0.5 * grid.derivative_symbol({2, 0}) - c.epsilon * grid.derivative_symbol({4, 0});
  const Eigen::ArrayXd mask = c.dealias ? grid.dealias_mask() : Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(grid.spectral_size()));

  Eigen::ArrayXd u0(static_cast<Eigen::Index>(axes[0].count));
  for (std::size_t i = 0; i < axes[0].count; ++i) u0(static_cast<Eigen::Index>(i)) = std::cos(axes[0].coordinate(i) / 16.0);

  auto nonlinear = [&](const Eigen::ArrayXcd& v) -> Eigen::ArrayXcd {
    const Eigen::ArrayXd u = grid.inverse(v);
    return -0.5 * d1 * grid.forward(u.square()) * mask;
  };
  const auto slices = detail::run_etdrk4(grid, linear, u0, c, nonlinear, "burgers-hyper");

  const double kmax = std::numbers::pi / axes[0].spacing;
  nlohmann::json stab = {{"max_linear_rate_dt", linear.abs().maxCoeff() * c.solver_dt},
                         {"advective_cfl", u0.abs().maxCoeff() * kmax * c.solver_dt}};
  Dataset ds(axes, detail::output_time_axis(c), detail::benchmark_metadata(c, stab));
  detail::add_slices(ds, "u", BoundaryKind::periodic, slices);
  return ds;
}

/// cos(3 * 2 pi x / L) - 0.5 sin(2 pi x / L): the stated cos(3x) - sin(x)/2
/// with wavenumbers rescaled to the periodic domain of length L.
inline Eigen::ArrayXd modified_ks_initial_condition(const Axis& x) {
  Eigen::ArrayXd u(static_cast<Eigen::Index>(x.count));
  const double k = 2.0 * std::numbers::pi / x.period();
  for (std::size_t i = 0; i < x.count; ++i) {
    const double xi = x.coordinate(i) - x.origin;
    u(static_cast<Eigen::Index>(i)) = std::cos(3.0 * k * xi) - 0.5 * std::sin(k * xi);
  }
  return u;
}

inline Dataset solve_modified_ks(const BenchmarkConfig& c) {
  c.validate();
  if (c.grid.size() != 1) throw ConfigError("modified-ks is one-dimensional");
  if (c.integrator != "etdrk4") throw ConfigError("modified-ks supports the etdrk4 integrator only");
  const auto axes = detail::benchmark_axes(c, false);
  SpectralGrid grid(axes);
  const Eigen::ArrayXcd d1 = grid.derivative_symbol({1, 0});
  const Eigen::ArrayXcd linear = -grid.derivative_symbol({2, 0}) - grid.derivative_symbol({4, 0});
  const Eigen::ArrayXd mask = c.dealias ? grid.dealias_mask() : Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(grid.spectral_size()));
  const double eps = c.epsilon;

  // u_t = L u - d/dx (u^2/2 + eps * sum_{k=3..6} u^k)
  auto nonlinear = [&](const Eigen::ArrayXcd& v) -> Eigen::ArrayXcd {
    const Eigen::ArrayXd u = grid.inverse(v);
    const Eigen::ArrayXd u2 = u.square(), u3 = u2 * u;
    const Eigen::ArrayXd flux = 0.5 * u2 + eps * (u3 + u3 * u + u3 * u2 + u3 * u3);
    return -d1 * grid.forward(flux) * mask;
  };
  const auto slices = detail::run_etdrk4(grid, linear, modified_ks_initial_condition(axes[0]), c, nonlinear, "modified-ks");

  nlohmann::json stab = {{"max_linear_rate_dt", linear.abs().maxCoeff() * c.solver_dt},
                         {"max_growth_rate", linear.real().maxCoeff()}};
  Dataset ds(axes, detail::output_time_axis(c), detail::benchmark_metadata(c, stab));
  detail::add_slices(ds, "u", BoundaryKind::periodic, slices);
  return ds;
}

/// Reaction part of the lambda-omega system (beta = 0.5):
/// (1 - A^2)(u, v) + beta A^2 (v, -u), A^2 = u^2 + v^2.
inline void rd_reaction(const Eigen::ArrayXd& u, const Eigen::ArrayXd& v, Eigen::ArrayXd& fu, Eigen::ArrayXd& fv) {
  const double beta = 0.5;
  const Eigen::ArrayXd a2 = u.square() + v.square();
  fu = (1.0 - a2) * u + beta * a2 * v;
  fv = (1.0 - a2) * v - beta * a2 * u;
}

/// Spiral initial condition: tanh(r) (cos, sin)(2 theta - r).
inline std::pair<Eigen::ArrayXd, Eigen::ArrayXd> rd_spiral_initial_condition(const Axis& x, const Axis& y) {
  const auto n = static_cast<Eigen::Index>(x.count * y.count);
  Eigen::ArrayXd u(n), v(n);
  for (std::size_t i = 0; i < x.count; ++i) {
    for (std::size_t j = 0; j < y.count; ++j) {
      const double xi = x.coordinate(i), yj = y.coordinate(j);
      const double r = std::hypot(xi, yj), th = std::atan2(yj, xi);
      const auto k = static_cast<Eigen::Index>(i * y.count + j);
      u(k) = std::tanh(r) * std::cos(2.0 * th - r);
      v(k) = std::tanh(r) * std::sin(2.0 * th - r);
    }
  }
  return {u, v};
}

/// 2D reaction-diffusion from explicit initial fields (used by solve_rd2d and tests).
inline Dataset solve_rd2d_from(const BenchmarkConfig& c, const Eigen::ArrayXd& u0, const Eigen::ArrayXd& v0) {
  c.validate();
  if (c.grid.size() != 2) throw ConfigError("rd2d is two-dimensional");
  if (c.integrator != "rk45") throw ConfigError("rd2d supports the rk45 integrator only");
  const auto axes = detail::benchmark_axes(c, false);
  SpectralGrid grid(axes);
  const Eigen::ArrayXd lap = (grid.derivative_symbol({2, 0}) + grid.derivative_symbol({0, 2})).real();
  const auto n = static_cast<Eigen::Index>(grid.real_size());
  if (u0.size() != n || v0.size() != n) throw ConfigError("rd2d initial fields do not match the grid");

  auto rhs = [&](double, const Eigen::ArrayXd& y) -> Eigen::ArrayXd {
    const Eigen::ArrayXd u = y.head(n), v = y.tail(n);
    Eigen::ArrayXd fu, fv;
    rd_reaction(u, v, fu, fv);
    Eigen::ArrayXd out(2 * n);
    out.head(n) = fu + c.epsilon * grid.inverse(grid.forward(u) * lap);
    out.tail(n) = fv + c.epsilon * grid.inverse(grid.forward(v) * lap);
    return out;
  };

  AdaptiveOptions opt;
  opt.atol = c.atol;
  opt.rtol = c.rtol;
  opt.initial_step = c.solver_dt;
  Eigen::ArrayXd y(2 * n);
  y << u0, v0;
  std::vector<Eigen::ArrayXd> us{u0}, vs{v0};
  double h = c.solver_dt;
  AdaptiveStats stats;
  for (std::size_t o = 1; o < c.output_count(); ++o) {
    const double t0 = static_cast<double>(o - 1) * c.output_dt, t1 = static_cast<double>(o) * c.output_dt;
    dopri45(y, t0, t1, rhs, opt, h, &stats);
    detail::check_bounded(y, t1, "rd2d");
    us.push_back(y.head(n));
    vs.push_back(y.tail(n));
  }

  nlohmann::json stab = {{"max_diffusion_rate", c.epsilon * lap.abs().maxCoeff()},
                         {"accepted_steps", stats.accepted},
                         {"rejected_steps", stats.rejected}};
  Dataset ds(axes, detail::output_time_axis(c), detail::benchmark_metadata(c, stab));
  detail::add_slices(ds, "u", BoundaryKind::periodic, us);
  detail::add_slices(ds, "v", BoundaryKind::periodic, vs);
  return ds;
}

inline Dataset solve_rd2d(const BenchmarkConfig& c) {
  const auto axes = detail::benchmark_axes(c, false);
  if (axes.size() != 2) throw ConfigError("rd2d is two-dimensional");
  const auto [u0, v0] = rd_spiral_initial_condition(axes[0], axes[1]);
  return solve_rd2d_from(c, u0, v0);
}

/// Dispatches on config.benchmark (custom-model is handled by integrate_model).
inline Dataset solve_benchmark(const BenchmarkConfig& c) {
  if (c.benchmark == "kdv") return solve_kdv(c);
  if (c.benchmark == "burgers-hyper") return solve_burgers_hyper(c);
  if (c.benchmark == "modified-ks") return solve_modified_ks(c);
  if (c.benchmark == "rd2d") return solve_rd2d(c);
  throw ConfigError("benchmark '" + c.benchmark + "' has no built-in solver");
}

} // namespace bgsindy

#endif // BGSINDY_BENCHMARKS_HPP
