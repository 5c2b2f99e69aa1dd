#ifndef BGSINDY_PIPELINE_HPP
#define BGSINDY_PIPELINE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bgsindy/benchmarks.hpp"
#include "bgsindy/dataset.hpp"
#include "bgsindy/denoise.hpp"
#include "bgsindy/differentiation.hpp"
#include "bgsindy/error.hpp"
#include "bgsindy/integrate.hpp"
#include "bgsindy/library.hpp"
#include "bgsindy/metrics.hpp"
#include "bgsindy/model.hpp"
#include "bgsindy/pruner.hpp"
#include "bgsindy/sampling.hpp"
#include "bgsindy/stencil.hpp"

namespace bgsindy {

enum class SmoothingMethod { local_polynomial, dct_threshold };

struct SmoothingSpec {
  SmoothingMethod method = SmoothingMethod::local_polynomial;
  std::size_t window = 1;
  int degree = 0;
  double threshold_scale = 1.0;
};

struct NoiseSpec {
  double gamma = 0.0;
  std::uint64_t seed = 0;
};

struct SamplingSpec {
  SampleStrategy strategy = SampleStrategy::uniform_random;
  /// Empty: every eligible point.
  std::optional<std::size_t> count = 100000;
  std::uint64_t seed = 0;
};

/// Everything `discover` needs besides the data.
struct DiscoverySpec {
  LibrarySpec library;
  std::vector<std::string> targets{"u"};
  SamplingSpec sampling;
  /// Space points skipped at non-periodic walls; empty means half the widest
  /// centred stencil of the library.
  std::optional<std::size_t> boundary_margin;
  std::size_t time_margin = 0;
  std::optional<NoiseSpec> noise;
  std::optional<SmoothingSpec> smoothing;
  PrunerConfig pruner;
  bool reduce = true;
};

inline nlohmann::json discovery_spec_to_json(const DiscoverySpec& s) {
  auto j = library_spec_to_json(s.library);
  j["targets"] = s.targets;
  j["samples"] = {{"strategy", to_string(s.sampling.strategy)},
                  {"count", s.sampling.count ? nlohmann::json(*s.sampling.count) : nlohmann::json(nullptr)},
                  {"seed", s.sampling.seed}};
  j["boundary_margin"] = s.boundary_margin ? nlohmann::json(*s.boundary_margin) : nlohmann::json("auto");
  j["time_margin"] = s.time_margin;
  j["noise"] = s.noise ? nlohmann::json{{"gamma", s.noise->gamma}, {"seed", s.noise->seed}} : nlohmann::json(nullptr);
  if (!s.smoothing) {
    j["smoothing"] = nullptr;
  } else if (s.smoothing->method == SmoothingMethod::local_polynomial) {
    j["smoothing"] = {{"method", "local-polynomial"}, {"window", s.smoothing->window}, {"degree", s.smoothing->degree}};
  } else {
    j["smoothing"] = {{"method", "dct-threshold"}, {"threshold_scale", s.smoothing->threshold_scale}};
  }
  j["tau"] = s.pruner.tau;
  j["epsilon"] = s.pruner.epsilon ? nlohmann::json(*s.pruner.epsilon) : nlohmann::json(nullptr);
  j["epsilon_rule"] = to_string(s.pruner.epsilon_rule);
  j["min_terms"] = s.pruner.min_terms;
  j["full_trace"] = s.pruner.record_full_trace;
  j["reduce"] = s.reduce;
  return j;
}

inline DiscoverySpec discovery_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("discovery spec must be a JSON object");
  DiscoverySpec s;
  s.library = library_spec_from_json(j);
  try {
    s.targets = j.contains("targets") ? j.at("targets").get<std::vector<std::string>>() : s.library.fields;
    if (j.contains("samples")) {
      const auto& sj = j.at("samples");
      s.sampling.strategy = strategy_from_string(sj.value("strategy", std::string("uniform-random")));
      if (sj.contains("count")) {
        if (sj.at("count").is_null() || (sj.at("count").is_string() && sj.at("count") == "all")) s.sampling.count.reset();
        else s.sampling.count = sj.at("count").get<std::size_t>();
      }
      s.sampling.seed = sj.value("seed", s.sampling.seed);
    }
    if (j.contains("boundary_margin") && !(j.at("boundary_margin").is_string() && j.at("boundary_margin") == "auto"))
      s.boundary_margin = j.at("boundary_margin").get<std::size_t>();
    s.time_margin = j.value("time_margin", s.time_margin);
    if (j.contains("noise") && !j.at("noise").is_null()) {
      const auto& nj = j.at("noise");
      s.noise = NoiseSpec{nj.at("gamma").get<double>(), nj.value("seed", std::uint64_t{0})};
      if (!(s.noise->gamma >= 0.0)) throw ConfigError("noise gamma must be non-negative");
    }
    if (j.contains("smoothing") && !j.at("smoothing").is_null()) {
      const auto& mj = j.at("smoothing");
      SmoothingSpec m;
      const auto method = mj.value("method", std::string("local-polynomial"));
      if (method == "local-polynomial") {
        m.method = SmoothingMethod::local_polynomial;
        m.window = mj.at("window").get<std::size_t>();
        m.degree = mj.at("degree").get<int>();
        if (m.window % 2 == 0) throw ConfigError("smoothing window must be odd");
        if (m.degree < 0 || static_cast<std::size_t>(m.degree) >= m.window)
          throw ConfigError("smoothing degree must be below the window length");
      } else if (method == "dct-threshold") {
        m.method = SmoothingMethod::dct_threshold;
        m.threshold_scale = mj.value("threshold_scale", m.threshold_scale);
        if (!(m.threshold_scale >= 0.0)) throw ConfigError("threshold_scale must be non-negative");
      } else {
        throw ConfigError("unknown smoothing method '" + method + "'");
      }
      s.smoothing = m;
    }
    s.pruner.tau = j.value("tau", s.pruner.tau);
    if (j.contains("epsilon") && !j.at("epsilon").is_null()) s.pruner.epsilon = j.at("epsilon").get<double>();
    if (j.contains("epsilon_rule")) s.pruner.epsilon_rule = epsilon_rule_from_string(j.at("epsilon_rule").get<std::string>());
    s.pruner.min_terms = j.value("min_terms", s.pruner.min_terms);
    s.pruner.record_full_trace = j.value("full_trace", s.pruner.record_full_trace);
    s.reduce = j.value("reduce", s.reduce);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed discovery spec: ") + e.what());
  }
  if (s.targets.empty()) throw ConfigError("discovery spec needs at least one target");
  s.pruner.validate();
  return s;
}

/// Noise (per library field, seed + field position) and then smoothing,
/// both applied to the raw field values before any differentiation.
inline Dataset prepare_dataset(const Dataset& ds, const DiscoverySpec& spec) {
  Dataset out = ds;
  std::vector<std::string> fields = spec.library.fields;
  for (const auto& t : spec.targets)
    if (std::find(fields.begin(), fields.end(), t) == fields.end()) fields.push_back(t);
  if (spec.noise && spec.noise->gamma > 0.0)
    for (std::size_t k = 0; k < fields.size(); ++k) out = add_noise(out, fields[k], spec.noise->gamma, spec.noise->seed + k);
  if (spec.smoothing) {
    for (const auto& f : fields) {
      if (spec.smoothing->method == SmoothingMethod::local_polynomial) {
        out.set_field_values(f, smooth_field(out, f, spec.smoothing->window, spec.smoothing->degree));
      } else {
        auto r = dct_denoise(out, f, spec.smoothing->threshold_scale);
        out.metadata()["denoise"][f] = {{"sigma", r.sigma}, {"kept", r.kept}};
        out.set_field_values(f, std::move(r.values));
      }
    }
  }
  return out;
}

inline std::size_t effective_boundary_margin(const Dataset& ds, const DiscoverySpec& spec) {
  if (spec.boundary_margin) return *spec.boundary_margin;
  bool bounded = false;
  for (const auto& f : spec.library.fields) bounded = bounded || ds.field(f).boundary != BoundaryKind::periodic;
  if (!bounded || spec.library.max_derivative < 1) return 0;
  return (central_stencil_size(spec.library.max_derivative, spec.library.fd_accuracy) - 1) / 2;
}

inline SampleSet discovery_samples(const Dataset& ds, const DiscoverySpec& spec) {
  const auto box = interior_box(ds, effective_boundary_margin(ds, spec), spec.time_margin);
  std::size_t eligible = 1;
  for (const auto& [lo, hi] : box) eligible *= hi - lo;
  if (!spec.sampling.count || *spec.sampling.count >= eligible)
    return subsample(ds, eligible, SampleStrategy::all, spec.sampling.seed, box);
  return subsample(ds, *spec.sampling.count, spec.sampling.strategy, spec.sampling.seed, box);
}

struct TargetDiscovery {
  Library library; ///< after independence reduction
  DiscoveryResult result;
};

struct DiscoveryRun {
  std::vector<TargetDiscovery> targets;
  std::vector<std::string> warnings;
  std::size_t sample_count = 0;

  std::vector<DiscoveredModel> models() const {
    std::vector<DiscoveredModel> out;
    for (const auto& t : targets) out.push_back(t.result.model);
    return out;
  }
};

/// Builds the library for every target on one shared sample set and prunes it.
inline DiscoveryRun run_discovery(const Dataset& raw, const DiscoverySpec& spec) {
  spec.pruner.validate();
  const Dataset ds = prepare_dataset(raw, spec);
  const SampleSet samples = discovery_samples(ds, spec);
  DiscoveryRun run;
  run.sample_count = samples.size();
  if (spec.pruner.tau < 1.05)
    run.warnings.push_back("tau is close to 1: the ratio rule reacts to round-off changes of the residual");
  for (const auto& target : spec.targets) {
    Library lib = build_library(ds, samples, spec.library, target);
    if (spec.reduce) lib = reduce_independent(lib, spec.library.independence_tol);
    for (const auto& w : lib.warnings) run.warnings.push_back(target + ": " + w);
    if (lib.rows() < lib.cols()) throw ConfigError("fewer samples than library terms for target '" + target + "'");
    auto result = discover(lib, spec.pruner);
    for (const auto& f : result.model.flags) run.warnings.push_back(target + ": " + f);
    run.targets.push_back({std::move(lib), std::move(result)});
  }
  return run;
}

inline nlohmann::json discovery_report(const DiscoveryRun& run, const DiscoverySpec& spec) {
  nlohmann::json j;
  j["spec"] = discovery_spec_to_json(spec);
  j["sample_count"] = run.sample_count;
  j["warnings"] = run.warnings;
  j["models"] = nlohmann::json::array();
  j["traces"] = nlohmann::json::object();
  for (const auto& t : run.targets) {
    auto m = model_to_json(t.result.model);
    m["library_size"] = t.library.cols();
    m["dropped_terms"] = nlohmann::json::array();
    for (const auto& d : t.library.dropped) m["dropped_terms"].push_back(render_term(d));
    j["models"].push_back(std::move(m));
    j["traces"][t.result.model.target_field] = trace_to_json(t.result.trace, t.library.terms);
  }
  return j;
}

/// Reference equations recorded in a benchmark dataset, if any.
inline std::vector<DiscoveredModel> reference_models_from_metadata(const Dataset& ds) {
  std::vector<DiscoveredModel> out;
  const auto& md = ds.metadata();
  if (!md.contains("reference_model")) return out;
  for (const auto& [field, mj] : md.at("reference_model").items()) out.push_back(model_from_json(mj));
  return out;
}

/// Models from a discovery report, a single model, or a list of models.
inline std::vector<DiscoveredModel> models_from_json(const nlohmann::json& j) {
  std::vector<DiscoveredModel> out;
  if (j.is_array()) {
    for (const auto& m : j) out.push_back(model_from_json(m));
  } else if (j.contains("models")) {
    for (const auto& m : j.at("models")) out.push_back(model_from_json(m));
  } else {
    out.push_back(model_from_json(j));
  }
  if (out.empty()) throw ConfigError("no models found");
  return out;
}

struct ValidationResult {
  nlohmann::json report;
  bool structure_ok = true;
};

/// Integrates the models from the reference's first slice and compares them
/// with the reference data and (when known) the reference equations.
inline ValidationResult validate_models(const std::vector<DiscoveredModel>& models, const Dataset& reference,
                                        const std::vector<DiscoveredModel>& reference_models,
                                        const IntegrationOptions& opt = {}) {
  ValidationResult v;
  auto& r = v.report;
  r["fields"] = nlohmann::json::object();
  for (const auto& m : models) {
    auto& fj = r["fields"][m.target_field];
    fj["equation"] = m.equation();
    const auto it = std::find_if(reference_models.begin(), reference_models.end(),
                                 [&](const auto& ref) { return ref.target_field == m.target_field; });
    if (it == reference_models.end()) {
      fj["reference_equation"] = nullptr;
      continue;
    }
    fj["reference_equation"] = it->equation();
    const auto s = structure_match(m, *it);
    fj["structure"] = structure_report_to_json(s);
    v.structure_ok = v.structure_ok && s.match;
    try {
      fj["coefficient_error"] = coefficient_error(m, *it);
    } catch (const ConfigError&) {
      fj["coefficient_error"] = nullptr;
    }
  }
  const Dataset predicted = integrate_model(models, reference, opt);
  r["integrator"] = predicted.metadata().at("integrator");
  r["dt"] = predicted.metadata().at("dt");
  for (const auto& m : models) r["fields"][m.target_field]["relative_l2"] = relative_l2(predicted, reference, m.target_field);
  r["structure_match"] = v.structure_ok;
  return v;
}

/// 64-bit FNV-1a, as lowercase hex.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Provenance for a run: the hash of the canonical config text, the seeds
/// and the toolkit version.
inline nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                                    const std::vector<std::uint64_t>& seeds) {
  return {{"command", command},
          {"config", config},
          {"config_hash", fnv1a_hex(config.dump())},
          {"seeds", seeds},
          {"version", version_string}};
}

/// Worker count: BGSINDY_THREADS when set (at least 1), else the hardware count.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("BGSINDY_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("BGSINDY_THREADS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs task(i) for i < count on up to `workers` threads; the first
/// exception (lowest index) is rethrown after all workers stop.
template <class Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct SweepSpec {
  std::vector<double> noise_levels;
  std::vector<std::size_t> sample_counts;
  std::vector<std::uint64_t> seeds;
  DiscoverySpec discovery;
};

struct SweepCell {
  double gamma = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool structure_match = false;
  std::optional<double> coefficient_error;
  std::string equation;
};

/// Noise-level by sample-count grid of single-target discoveries. Each seed
/// drives both the noise draw and the sampling; every cell is independent.
inline std::vector<SweepCell> run_sweep(const Dataset& clean, const DiscoveredModel& reference, const SweepSpec& spec,
                                        std::size_t workers) {
  if (spec.noise_levels.empty() || spec.sample_counts.empty() || spec.seeds.empty())
    throw ConfigError("sweep needs noise levels, sample counts and seeds");
  const std::size_t ng = spec.noise_levels.size(), nn = spec.sample_counts.size(), ns = spec.seeds.size();
  std::vector<SweepCell> cells(ng * nn * ns);
  // One task per (noise, seed): the noisy data set is shared by every sample count.
  parallel_for(ng * ns, workers, [&](std::size_t task) {
    const std::size_t g = task / ns, s = task % ns;
    DiscoverySpec d = spec.discovery;
    d.targets = {reference.target_field};
    d.noise = NoiseSpec{spec.noise_levels[g], spec.seeds[s]};
    const Dataset noisy = prepare_dataset(clean, d);
    d.noise.reset();
    d.smoothing.reset();
    for (std::size_t k = 0; k < nn; ++k) {
      d.sampling.count = spec.sample_counts[k];
      d.sampling.seed = spec.seeds[s];
      SweepCell& c = cells[(g * nn + k) * ns + s];
      c.gamma = spec.noise_levels[g];
      c.samples = spec.sample_counts[k];
      c.seed = spec.seeds[s];
      const auto run = run_discovery(noisy, d);
      const auto& model = run.targets.front().result.model;
      c.equation = model.equation();
      c.structure_match = structure_match(model, reference).match;
      try {
        c.coefficient_error = coefficient_error(model, reference);
      } catch (const ConfigError&) {
        c.coefficient_error.reset();
      }
    }
  });
  return cells;
}

/// One row per cell and seed.
inline void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << "gamma,samples,seed,structure_match,coefficient_error,equation\n" << std::setprecision(17);
  for (const auto& c : cells) {
    os << c.gamma << ',' << c.samples << ',' << c.seed << ',' << (c.structure_match ? 1 : 0) << ',';
    if (c.coefficient_error) os << *c.coefficient_error;
    os << ",\"" << c.equation << "\"\n";
  }
}

struct SweepSummary {
  double gamma = 0.0;
  std::size_t samples = 0;
  double mean_error = 0.0; ///< over seeds with a common term set; NaN if none
  double std_error = 0.0;
  std::size_t failures = 0; ///< seeds whose structure differs from the reference
  std::size_t seeds = 0;
};

inline std::vector<SweepSummary> summarize_sweep(const std::vector<SweepCell>& cells) {
  std::vector<SweepSummary> out;
  for (const auto& c : cells) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.gamma == c.gamma && s.samples == c.samples; });
    if (it == out.end()) {
      out.push_back({c.gamma, c.samples});
      it = out.end() - 1;
    }
    ++it->seeds;
    if (!c.structure_match) ++it->failures;
  }
  for (auto& s : out) {
    std::vector<double> errs;
    for (const auto& c : cells)
      if (c.gamma == s.gamma && c.samples == s.samples && c.coefficient_error) errs.push_back(*c.coefficient_error);
    if (errs.empty()) {
      s.mean_error = std::nan("");
      continue;
    }
    double sum = 0.0;
    for (double e : errs) sum += e;
    s.mean_error = sum / static_cast<double>(errs.size());
    double ss = 0.0;
    for (double e : errs) ss += (e - s.mean_error) * (e - s.mean_error);
    s.std_error = std::sqrt(ss / static_cast<double>(errs.size()));
  }
  return out;
}

/// Heatmap: rows are noise levels, columns sample counts, entries the mean
/// coefficient error; a trailing '*' marks cells where some seed recovered
/// the wrong structure.
inline void write_sweep_heatmap(std::ostream& os, const std::vector<SweepSummary>& summary) {
  std::vector<double> gammas;
  std::vector<std::size_t> counts;
  for (const auto& s : summary) {
    if (std::find(gammas.begin(), gammas.end(), s.gamma) == gammas.end()) gammas.push_back(s.gamma);
    if (std::find(counts.begin(), counts.end(), s.samples) == counts.end()) counts.push_back(s.samples);
  }
  os << "gamma";
  for (auto n : counts) os << ",n=" << n;
  os << '\n' << std::setprecision(6);
  for (double g : gammas) {
    os << g;
    for (auto n : counts) {
      os << ',';
      for (const auto& s : summary) {
        if (s.gamma != g || s.samples != n) continue;
        if (std::isnan(s.mean_error)) os << "nan";
        else os << s.mean_error;
        if (s.failures > 0) os << '*';
      }
    }
    os << '\n';
  }
}

} // namespace bgsindy

#endif // BGSINDY_PIPELINE_HPP
