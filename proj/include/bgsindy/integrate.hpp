#ifndef BGSINDY_INTEGRATE_HPP
#define BGSINDY_INTEGRATE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bgsindy/benchmarks.hpp"
#include "bgsindy/dataset.hpp"
#include "bgsindy/error.hpp"
#include "bgsindy/integrators.hpp"
#include "bgsindy/model.hpp"
#include "bgsindy/spectral.hpp"
#include "bgsindy/stencil.hpp"

namespace bgsindy {

struct IntegrationOptions {
  /// "auto" picks etdrk4 for periodic grids with a linear derivative part, rk4 otherwise.
  std::string integrator = "auto";
  /// Base step; empty takes the reference solver step (output interval / 10 for adaptive references).
  std::optional<double> dt;
  /// Empty takes the reference setting, else true.
  std::optional<bool> dealias;
  int fd_accuracy = 4;
  int contour_points = 64;
};

/// Raised when an integrated model leaves the bounded range; carries the
/// slices computed so far when there are enough of them to form a dataset.
class BlowUpError : public NumericalError {
public:
  BlowUpError(const std::string& what, double time, std::optional<Dataset> partial)
      : NumericalError(what), time_(time), partial_(std::move(partial)) {}

  double time() const { return time_; }
  const std::optional<Dataset>& partial() const { return partial_; }

private:
  double time_;
  std::optional<Dataset> partial_;
};

namespace detail {

/// Derivatives on a homogeneous-Dirichlet grid: centred stencils everywhere,
/// with odd reflection about the wall points supplying the values outside.
class DirichletDifferencer {
public:
  DirichletDifferencer(std::vector<Axis> axes, int accuracy) : axes_(std::move(axes)), accuracy_(accuracy) {}

  Eigen::ArrayXd derivative(const Eigen::ArrayXd& u, std::array<int, 2> orders) const {
    Eigen::ArrayXd out = u;
    for (std::size_t d = 0; d < axes_.size(); ++d)
      if (orders[d] > 0) out = along(out, d, orders[d]);
    return out;
  }

  /// Sum of |weights| / h^q per axis: bounds the operator norm.
  double norm_bound(std::array<int, 2> orders) const {
    double b = 1.0;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
      if (orders[d] == 0) continue;
      double s = 0.0;
      for (double w : stencil(orders[d]).weights) s += std::abs(w);
      b *= s / std::pow(axes_[d].spacing, orders[d]);
    }
    return b;
  }

private:
  const Stencil& stencil(int q) const {
    auto it = cache_.find(q);
    if (it != cache_.end()) return it->second;
    check_fd_parameters(q, accuracy_);
    const std::size_t size = central_stencil_size(q, accuracy_);
    const int half = static_cast<int>(size / 2);
    Stencil s;
    std::vector<double> nodes;
    for (int k = -half; k <= half; ++k) {
      s.offsets.push_back(k);
      nodes.push_back(k);
    }
    s.weights = fornberg_weights(0.0, nodes, q);
    return cache_.emplace(q, std::move(s)).first->second;
  }

  Eigen::ArrayXd along(const Eigen::ArrayXd& u, std::size_t axis, int q) const {
    const Stencil& st = stencil(q);
    const auto n = static_cast<long>(axes_[axis].count);
    const long half = st.offsets.back();
    if (half > n - 1) throw ConfigError("grid too short for the derivative stencil");
    const std::size_t stride = axis + 1 < axes_.size() ? axes_[axis + 1].count : 1;
    const std::size_t lines = static_cast<std::size_t>(u.size()) / static_cast<std::size_t>(n);
    const double scale = 1.0 / std::pow(axes_[axis].spacing, q);
    Eigen::ArrayXd out(u.size());
    std::vector<double> ext(static_cast<std::size_t>(n + 2 * half));
    for (std::size_t line = 0; line < lines; ++line) {
      const std::size_t base = axis == 0 ? line : line * static_cast<std::size_t>(n);
      auto at = [&](long i) { return u(static_cast<Eigen::Index>(base + static_cast<std::size_t>(i) * stride)); };
      for (long i = 0; i < n; ++i) ext[static_cast<std::size_t>(i + half)] = at(i);
      for (long k = 1; k <= half; ++k) {
        ext[static_cast<std::size_t>(half - k)] = -at(k);
        ext[static_cast<std::size_t>(half + n - 1 + k)] = -at(n - 1 - k);
      }
      for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t m = 0; m < st.weights.size(); ++m)
          acc += st.weights[m] * ext[static_cast<std::size_t>(i + half + st.offsets[m])];
        out(static_cast<Eigen::Index>(base + static_cast<std::size_t>(i) * stride)) = acc * scale;
      }
    }
    return out;
  }

  std::vector<Axis> axes_;
  int accuracy_;
  mutable std::map<int, Stencil> cache_;
};

struct TermPlan {
  std::size_t target = 0;
  double coefficient = 0.0;
  std::vector<std::pair<std::size_t, int>> powers;
  std::optional<std::pair<std::size_t, std::array<int, 2>>> derivative;
  /// Linear in the target's own field: handled exactly by ETDRK4.
  bool linear = false;
};

inline std::vector<TermPlan> plan_terms(const std::vector<DiscoveredModel>& models,
                                        const std::vector<std::string>& fields, std::size_t space_dims) {
  auto index_of = [&](const std::string& name) {
    const auto it = std::find(fields.begin(), fields.end(), name);
    if (it == fields.end()) throw ConfigError("model refers to field '" + name + "' that has no equation");
    return static_cast<std::size_t>(it - fields.begin());
  };
  std::vector<TermPlan> plans;
  for (std::size_t m = 0; m < models.size(); ++m) {
    models[m].validate();
    for (std::size_t j = 0; j < models[m].terms.size(); ++j) {
      const auto& term = models[m].terms[j];
      TermPlan p;
      p.target = m;
      p.coefficient = models[m].coefficients[j];
      for (const auto& [name, power] : term.powers) p.powers.emplace_back(index_of(name), power);
      if (term.derivative) {
        if (term.derivative->orders[1] > 0 && space_dims < 2) throw ConfigError("y derivative in a 1D model");
        p.derivative = std::make_pair(index_of(term.derivative->field), term.derivative->orders);
        p.linear = p.powers.empty() && p.derivative->first == m;
      } else {
        p.linear = p.powers.size() == 1 && p.powers[0].first == m && p.powers[0].second == 1;
      }
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

inline Eigen::ArrayXd monomial(const TermPlan& p, const std::vector<Eigen::ArrayXd>& u, Eigen::Index n) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Ones(n);
  for (const auto& [f, power] : p.powers)
    for (int k = 0; k < power; ++k) out *= u[f];
  return out;
}

inline std::optional<Dataset> partial_dataset(const std::vector<Axis>& axes, const Axis& time,
                                              const std::vector<std::string>& fields,
                                              const std::vector<BoundaryKind>& bounds,
                                              const std::vector<std::vector<Eigen::ArrayXd>>& slices,
                                              const nlohmann::json& md) {
  const std::size_t have = slices.empty() ? 0 : slices[0].size();
  if (have < Dataset::min_axis_count) return std::nullopt;
  Dataset ds(axes, Axis{time.origin, time.spacing, have}, md);
  for (std::size_t f = 0; f < fields.size(); ++f) add_slices(ds, fields[f], bounds[f], slices[f]);
  return ds;
}

} // namespace detail

/// Forward-integrates a system of discovered models by the method of lines.
/// `initial` holds one space slice per model (same order); outputs are
/// written on `time` (its origin is the initial time).
inline Dataset integrate_model(const std::vector<DiscoveredModel>& models, const std::vector<Axis>& space,
                               const std::vector<BoundaryKind>& boundaries,
                               const std::vector<Eigen::ArrayXd>& initial, const Axis& time,
                               const IntegrationOptions& opt, double base_dt, bool dealias_default = true) {
  if (models.empty()) throw ConfigError("integrate_model: no models");
  if (initial.size() != models.size() || boundaries.size() != models.size())
    throw ConfigError("integrate_model: one initial field and boundary kind per model required");
  if (!(base_dt > 0.0)) throw ConfigError("integrate_model: step must be positive");
  std::vector<std::string> fields;
  for (const auto& m : models) {
    if (std::find(fields.begin(), fields.end(), m.target_field) != fields.end())
      throw ConfigError("integrate_model: two models for field '" + m.target_field + "'");
    fields.push_back(m.target_field);
  }
  const auto plans = detail::plan_terms(models, fields, space.size());
  const bool periodic = boundaries[0] == BoundaryKind::periodic;
  for (auto b : boundaries)
    if (b != boundaries[0]) throw ConfigError("integrate_model: mixed boundary kinds are not supported");

  std::size_t npts = 1;
  for (const auto& a : space) npts *= a.count;
  const auto n = static_cast<Eigen::Index>(npts);
  const auto nf = static_cast<Eigen::Index>(fields.size());
  for (const auto& u0 : initial) {
    if (u0.size() != n) throw ConfigError("integrate_model: initial field does not match the grid");
    if (!u0.allFinite()) throw NumericalError("integrate_model: non-finite initial field");
  }

  std::string scheme = opt.integrator;
  const bool has_linear_derivative =
      std::any_of(plans.begin(), plans.end(), [](const auto& p) { return p.linear && p.derivative; });
  if (scheme == "auto") scheme = periodic && has_linear_derivative ? "etdrk4" : "rk4";
  if (scheme != "etdrk4" && scheme != "rk4") throw ConfigError("integrate_model: unknown integrator '" + scheme + "'");
  if (scheme == "etdrk4" && !periodic) throw ConfigError("integrate_model: etdrk4 needs a periodic grid");
  const bool dealias = periodic && opt.dealias.value_or(dealias_default);

  std::optional<SpectralGrid> grid;
  std::optional<detail::DirichletDifferencer> fd;
  if (periodic) grid.emplace(space);
  else fd.emplace(space, opt.fd_accuracy);
  const Eigen::Index ns = periodic ? static_cast<Eigen::Index>(grid->spectral_size()) : 0;
  const Eigen::ArrayXd mask = dealias ? grid->dealias_mask() : Eigen::ArrayXd::Ones(ns);

  // Step size: the base step, reduced on the rk4 path to a bound on the spectral radius.
  double dt = base_dt;
  if (scheme == "rk4") {
    double umax = 0.0;
    for (const auto& u0 : initial) umax = std::max(umax, u0.abs().maxCoeff());
    double rho = 0.0;
    for (const auto& p : plans) {
      int degree = 0;
      for (const auto& pw : p.powers) degree += pw.second;
      double op = 1.0;
      if (p.derivative) {
        if (periodic) {
          op = grid->derivative_symbol(p.derivative->second).abs().maxCoeff();
        } else {
          op = fd->norm_bound(p.derivative->second);
        }
        op *= std::pow(umax, degree);
      } else {
        op = degree * std::pow(umax, std::max(degree - 1, 0));
      }
      rho += std::abs(p.coefficient) * op;
    }
    if (rho > 0.0) dt = std::min(dt, 2.5 / rho);
  }
  const auto substeps = static_cast<std::size_t>(std::ceil(time.spacing / dt - 1e-9));
  dt = time.spacing / static_cast<double>(std::max<std::size_t>(substeps, 1));

  nlohmann::json md;
  md["integrated_models"] = nlohmann::json::array();
  for (const auto& m : models) md["integrated_models"].push_back(model_to_json(m));
  md["integrator"] = scheme;
  md["dt"] = dt;
  md["dealias"] = dealias;
  md["version"] = version_string;

  std::vector<std::vector<Eigen::ArrayXd>> slices(fields.size());
  for (std::size_t f = 0; f < fields.size(); ++f) slices[f].push_back(initial[f]);
  auto check = [&](const std::vector<Eigen::ArrayXd>& u, std::size_t o) {
    const double t = time.coordinate(o);
    for (std::size_t f = 0; f < u.size(); ++f) {
      if (!u[f].allFinite() || u[f].abs().maxCoeff() > blowup_threshold)
        throw BlowUpError("integrated model blew up near t = " + std::to_string(t), t,
                          detail::partial_dataset(space, time, fields, boundaries, slices, md));
      slices[f].push_back(u[f]);
    }
  };

  if (scheme == "etdrk4") {
    Eigen::ArrayXcd linear = Eigen::ArrayXcd::Zero(nf * ns);
    for (const auto& p : plans) {
      if (!p.linear) continue;
      auto block = linear.segment(static_cast<Eigen::Index>(p.target) * ns, ns);
      if (p.derivative) block += p.coefficient * grid->derivative_symbol(p.derivative->second);
      else block += p.coefficient;
    }
    const Etdrk4 stepper(linear, dt, opt.contour_points);
    std::map<std::pair<std::size_t, std::array<int, 2>>, Eigen::ArrayXcd> symbols;
    for (const auto& p : plans)
      if (p.derivative && !p.linear && !symbols.count(*p.derivative))
        symbols.emplace(*p.derivative, grid->derivative_symbol(p.derivative->second));

    auto nonlinear = [&](const Eigen::ArrayXcd& v) -> Eigen::ArrayXcd {
      std::vector<Eigen::ArrayXd> u(fields.size());
      for (std::size_t f = 0; f < fields.size(); ++f) u[f] = grid->inverse(v.segment(static_cast<Eigen::Index>(f) * ns, ns));
      std::vector<Eigen::ArrayXd> sum(fields.size(), Eigen::ArrayXd::Zero(n));
      std::map<std::pair<std::size_t, std::array<int, 2>>, Eigen::ArrayXd> derivs;
      for (const auto& p : plans) {
        if (p.linear) continue;
        Eigen::ArrayXd term = detail::monomial(p, u, n);
        if (p.derivative) {
          auto it = derivs.find(*p.derivative);
          if (it == derivs.end()) {
            const auto f = static_cast<Eigen::Index>(p.derivative->first);
            it = derivs.emplace(*p.derivative, grid->inverse(v.segment(f * ns, ns) * symbols.at(*p.derivative))).first;
          }
          term *= it->second;
        }
        sum[p.target] += p.coefficient * term;
      }
      Eigen::ArrayXcd out(nf * ns);
      for (std::size_t f = 0; f < fields.size(); ++f)
        out.segment(static_cast<Eigen::Index>(f) * ns, ns) = grid->forward(sum[f]) * mask;
      return out;
    };

    Eigen::ArrayXcd v(nf * ns);
    for (std::size_t f = 0; f < fields.size(); ++f) v.segment(static_cast<Eigen::Index>(f) * ns, ns) = grid->forward(initial[f]);
    for (std::size_t o = 1; o < time.count; ++o) {
      for (std::size_t s = 0; s < substeps; ++s) stepper.step(v, nonlinear);
      std::vector<Eigen::ArrayXd> u(fields.size());
      for (std::size_t f = 0; f < fields.size(); ++f) u[f] = grid->inverse(v.segment(static_cast<Eigen::Index>(f) * ns, ns));
      check(u, o);
    }
  } else {
    auto derivative = [&](const Eigen::ArrayXd& u, std::array<int, 2> orders) {
      return periodic ? grid->derivative(u, orders) : fd->derivative(u, orders);
    };
    auto rhs = [&](double, const Eigen::ArrayXd& y) -> Eigen::ArrayXd {
      std::vector<Eigen::ArrayXd> u(fields.size());
      for (std::size_t f = 0; f < fields.size(); ++f) u[f] = y.segment(static_cast<Eigen::Index>(f) * n, n);
      std::map<std::pair<std::size_t, std::array<int, 2>>, Eigen::ArrayXd> derivs;
      Eigen::ArrayXd out = Eigen::ArrayXd::Zero(nf * n);
      for (const auto& p : plans) {
        Eigen::ArrayXd term = detail::monomial(p, u, n);
        if (p.derivative) {
          auto it = derivs.find(*p.derivative);
          if (it == derivs.end()) it = derivs.emplace(*p.derivative, derivative(u[p.derivative->first], p.derivative->second)).first;
          term *= it->second;
        }
        out.segment(static_cast<Eigen::Index>(p.target) * n, n) += p.coefficient * term;
      }
      for (std::size_t f = 0; f < fields.size(); ++f) {
        auto block = out.segment(static_cast<Eigen::Index>(f) * n, n);
        if (dealias) {
          block = grid->inverse(grid->forward(Eigen::ArrayXd(block)) * mask);
        } else if (!periodic) {
          // Wall values stay at the Dirichlet value.
          for (std::size_t d = 0; d < space.size(); ++d) {
            const std::size_t stride = d + 1 < space.size() ? space[d + 1].count : 1;
            const std::size_t len = space[d].count;
            for (std::size_t k = 0; k < npts; ++k) {
              const std::size_t i = (k / stride) % len;
              if (i == 0 || i + 1 == len) block(static_cast<Eigen::Index>(k)) = 0.0;
            }
          }
        }
      }
      return out;
    };
    Eigen::ArrayXd y(nf * n);
    for (std::size_t f = 0; f < fields.size(); ++f) y.segment(static_cast<Eigen::Index>(f) * n, n) = initial[f];
    double t = time.origin;
    for (std::size_t o = 1; o < time.count; ++o) {
      for (std::size_t s = 0; s < substeps; ++s) {
        y = rk4_step(y, t, dt, rhs);
        t += dt;
      }
      std::vector<Eigen::ArrayXd> u(fields.size());
      for (std::size_t f = 0; f < fields.size(); ++f) u[f] = y.segment(static_cast<Eigen::Index>(f) * n, n);
      check(u, o);
    }
  }

  Dataset ds(space, time, md);
  for (std::size_t f = 0; f < fields.size(); ++f) detail::add_slices(ds, fields[f], boundaries[f], slices[f]);
  return ds;
}

/// Integrates the models from the first slice of `reference`, on its grid and
/// time axis. The base step comes from the reference's solver metadata.
inline Dataset integrate_model(const std::vector<DiscoveredModel>& models, const Dataset& reference,
                               const IntegrationOptions& opt = {}) {
  std::vector<BoundaryKind> bounds;
  std::vector<Eigen::ArrayXd> initial;
  for (const auto& m : models) {
    const auto& f = reference.field(m.target_field);
    bounds.push_back(f.boundary);
    const auto s = reference.slice(m.target_field, 0);
    initial.push_back(Eigen::Map<const Eigen::ArrayXd>(s.data(), static_cast<Eigen::Index>(s.size())));
  }
  const auto& md = reference.metadata();
  double base = reference.time_axis().spacing;
  if (opt.dt) {
    base = *opt.dt;
  } else if (md.contains("solver_dt") && md.value("integrator", std::string()) != "rk45") {
    base = md.at("solver_dt").get<double>();
  } else {
    base = reference.time_axis().spacing / 10.0;
  }
  const bool dealias_default = md.value("dealias", true);
  Dataset out = integrate_model(models, reference.space_axes(), bounds, initial, reference.time_axis(), opt, base,
                                dealias_default);
  if (md.contains("benchmark")) out.metadata()["reference_benchmark"] = md.at("benchmark");
  return out;
}

} // namespace bgsindy

#endif // BGSINDY_INTEGRATE_HPP
