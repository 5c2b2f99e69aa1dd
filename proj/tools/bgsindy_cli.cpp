// Command-line driver: generate, discover, baseline, validate, sweep, report.
//
// Configuration precedence (lowest to highest): built-in defaults, values
// recorded in the dataset metadata, the JSON file given on the command line,
// explicit flags.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bgsindy/bgsindy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bgsindy;

namespace {

enum ExitCode : int { ok = 0, internal_error = 1, structure_failure = 2, numerical_abort = 3, config_error = 4 };

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Overlays the keys of `patch` onto `base` (objects merge recursively).
void overlay(json& base, const json& patch) {
  for (const auto& [k, v] : patch.items()) {
    if (v.is_object() && base.contains(k) && base[k].is_object()) overlay(base[k], v);
    else base[k] = v;
  }
}

/// "a:b:n" gives n evenly spaced values from a to b; otherwise a comma list.
std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      std::vector<std::string> parts;
      std::stringstream ss(text);
      for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
      if (parts.size() != 3) throw ConfigError("range must be start:stop:count");
      const double a = std::stod(parts[0]), b = std::stod(parts[1]);
      const int n = std::stoi(parts[2]);
      if (n < 1) throw ConfigError("range count must be positive");
      for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    } else {
      std::stringstream ss(text);
      for (std::string p; std::getline(ss, p, ',');) out.push_back(std::stod(p));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse number list '" + text + "'");
  }
  return out;
}

template <class T>
std::vector<T> parse_integers(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  try {
    for (std::string p; std::getline(ss, p, ',');) {
      std::size_t used = 0;
      const auto v = std::stoull(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
      out.push_back(static_cast<T>(v));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse integer list '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

/// Discovery spec for a data set: benchmark defaults, then the file, then flags.
json discovery_config(const Dataset& ds, const std::optional<fs::path>& spec_file) {
  json cfg = ds.metadata().value("library_spec", json::object());
  if (spec_file) overlay(cfg, read_json(*spec_file));
  if (!cfg.contains("kind")) throw ConfigError("no library spec: pass --library-spec for data without benchmark metadata");
  return cfg;
}

struct GenerateArgs {
  std::string benchmark;
  std::optional<fs::path> config;
  fs::path out = "data";
  std::optional<std::string> resolution;
};

int run_generate(const GenerateArgs& a) {
  json cfg = a.config ? read_json(*a.config) : json::object();
  if (a.resolution) cfg["resolution"] = *a.resolution;
  const BenchmarkConfig c = benchmark_config_from_json(cfg, a.benchmark);
  c.validate();
  Dataset ds = [&] {
    if (c.benchmark != "custom-model") return solve_benchmark(c);
    // custom-model: extra.model holds the equations, extra.reference a data
    // set whose first slice and grid are used.
    if (!c.extra.contains("model") || !c.extra.contains("reference"))
      throw ConfigError("custom-model needs extra.model and extra.reference");
    const auto models = models_from_json(c.extra.at("model"));
    const Dataset ref = load_dataset(c.extra.at("reference").get<std::string>());
    return integrate_model(models, ref, IntegrationOptions{});
  }();
  const fs::path stem = a.out / c.benchmark;
  save_dataset(ds, stem);
  json manifest_cfg = benchmark_config_to_json(c);
  write_json(a.out / (c.benchmark + ".manifest.json"), make_manifest("generate", manifest_cfg, {}));
  std::cout << "wrote " << dataset_header_path(stem).string() << " (" << ds.time_axis().count << " snapshots)\n";
  return ok;
}

struct DiscoverArgs {
  fs::path data;
  std::optional<fs::path> library_spec;
  std::optional<double> tau;
  std::optional<std::string> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  fs::path out = "run";
};

int run_discover(const DiscoverArgs& a) {
  const Dataset ds = load_dataset(a.data);
  json cfg = discovery_config(ds, a.library_spec);
  if (a.tau) cfg["tau"] = *a.tau;
  if (a.samples) cfg["samples"]["count"] = *a.samples == "all" ? json("all") : json(parse_integers<std::size_t>(*a.samples).front());
  if (a.seed) cfg["samples"]["seed"] = *a.seed;
  if (a.noise) cfg["noise"] = {{"gamma", *a.noise}, {"seed", a.seed.value_or(0)}};
  const DiscoverySpec spec = discovery_spec_from_json(cfg);

  const DiscoveryRun run = run_discovery(ds, spec);
  const json report = discovery_report(run, spec);
  fs::create_directories(a.out);
  write_json(a.out / "report.json", report);
  write_json(a.out / "model.json", json{{"models", report.at("models")}});
  write_json(a.out / "trace.json", report.at("traces"));
  for (const auto& t : run.targets) {
    std::ostringstream csv;
    write_trace_csv(csv, t.result.trace, t.library.terms);
    write_text(a.out / ("trace_" + t.result.model.target_field + ".csv"), csv.str());
  }
  std::vector<std::uint64_t> seeds{spec.sampling.seed};
  if (spec.noise) seeds.push_back(spec.noise->seed);
  json manifest = make_manifest("discover", discovery_spec_to_json(spec), seeds);
  manifest["data"] = a.data.string();
  write_json(a.out / "manifest.json", manifest);

  for (const auto& w : run.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& m : run.models()) std::cout << m.equation() << '\n';
  return ok;
}

struct BaselineArgs {
  std::string method;
  fs::path data;
  std::optional<fs::path> params;
  std::optional<fs::path> library_spec;
  std::optional<double> threshold;
  std::optional<fs::path> out;
};

int run_baseline(const BaselineArgs& a) {
  const Dataset ds = load_dataset(a.data);
  const DiscoverySpec spec = discovery_spec_from_json(discovery_config(ds, a.library_spec));
  json params = a.params ? read_json(*a.params) : json::object();
  if (a.threshold) params["threshold"] = *a.threshold;

  const Dataset prepared = prepare_dataset(ds, spec);
  const SampleSet samples = discovery_samples(prepared, spec);
  json models = json::array();
  for (const auto& target : spec.targets) {
    Library lib = build_library(prepared, samples, spec.library, target);
    if (spec.reduce) lib = reduce_independent(lib, spec.library.independence_tol);
    DiscoveredModel m;
    if (a.method == "stlsq") m = stlsq(lib, stlsq_config_from_json(params));
    else m = train_stridge(lib, stridge_config_from_json(params));
    std::cout << m.equation() << '\n';
    models.push_back(model_to_json(m));
  }
  const json result{{"method", a.method}, {"params", params}, {"models", models}};
  json manifest_cfg{{"method", a.method}, {"params", params}, {"discovery", discovery_spec_to_json(spec)}};
  const auto manifest = make_manifest("baseline", manifest_cfg, {spec.sampling.seed});
  if (a.out) {
    write_json(*a.out, result);
    auto mpath = *a.out;
    mpath.replace_extension(".manifest.json");
    write_json(mpath, manifest);
  } else {
    std::cout << result.dump(2) << '\n';
  }
  return ok;
}

struct ValidateArgs {
  fs::path model;
  fs::path reference;
  std::optional<fs::path> reference_model;
  std::optional<std::string> integrator;
  std::optional<double> dt;
  std::optional<fs::path> out;
};

int run_validate(const ValidateArgs& a) {
  const auto models = models_from_json(read_json(a.model));
  const Dataset ref = load_dataset(a.reference);
  const auto ref_models =
      a.reference_model ? models_from_json(read_json(*a.reference_model)) : reference_models_from_metadata(ref);
  IntegrationOptions opt;
  if (a.integrator) opt.integrator = *a.integrator;
  opt.dt = a.dt;
  const auto v = validate_models(models, ref, ref_models, opt);
  if (a.out) {
    write_json(*a.out, v.report);
    auto mpath = *a.out;
    mpath.replace_extension(".manifest.json");
    json cfg{{"model", a.model.string()}, {"reference", a.reference.string()}, {"integrator", opt.integrator}};
    if (opt.dt) cfg["dt"] = *opt.dt;
    write_json(mpath, make_manifest("validate", cfg, {}));
  }
  std::cout << v.report.dump(2) << '\n';
  if (ref_models.empty()) std::cerr << "warning: no reference equations known; structure not checked\n";
  return v.structure_ok ? ok : structure_failure;
}

struct SweepArgs {
  std::optional<fs::path> config;
  std::optional<fs::path> data;
  std::string benchmark = "kdv";
  std::optional<std::string> noise;
  std::optional<std::string> samples;
  std::optional<std::string> seeds;
  fs::path out = "sweep";
};

int run_sweep_command(const SweepArgs& a) {
  json cfg = a.config ? read_json(*a.config) : json::object();
  if (a.noise) cfg["noise"] = parse_levels(*a.noise);
  if (a.samples) cfg["samples"] = parse_integers<std::size_t>(*a.samples);
  if (a.seeds) cfg["seeds"] = parse_integers<std::uint64_t>(*a.seeds);
  if (!cfg.contains("noise")) cfg["noise"] = parse_levels("0:0.25:6");
  if (!cfg.contains("samples")) cfg["samples"] = {1000, 10000, 100000};
  if (!cfg.contains("seeds")) cfg["seeds"] = {0, 1, 2};

  const Dataset clean = [&] {
    if (a.data) return load_dataset(*a.data);
    if (cfg.contains("data")) return load_dataset(cfg.at("data").get<std::string>());
    return solve_benchmark(default_benchmark_config(cfg.value("benchmark", a.benchmark)));
  }();
  json dj = clean.metadata().value("library_spec", json::object());
  if (cfg.contains("discovery")) overlay(dj, cfg.at("discovery"));
  if (!dj.contains("smoothing")) dj["smoothing"] = {{"method", "dct-threshold"}, {"threshold_scale", 1.0}};

  SweepSpec spec;
  try {
    spec.noise_levels = cfg.at("noise").get<std::vector<double>>();
    spec.sample_counts = cfg.at("samples").get<std::vector<std::size_t>>();
    spec.seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sweep config: ") + e.what());
  }
  spec.discovery = discovery_spec_from_json(dj);
  const auto refs = reference_models_from_metadata(clean);
  const std::string target = spec.discovery.targets.front();
  const auto ref = std::find_if(refs.begin(), refs.end(), [&](const auto& m) { return m.target_field == target; });
  if (ref == refs.end()) throw ConfigError("sweep needs reference equations for field '" + target + "'");

  const auto cells = run_sweep(clean, *ref, spec, worker_count());
  const auto summary = summarize_sweep(cells);
  std::ostringstream long_csv, heat_csv;
  write_sweep_csv(long_csv, cells);
  write_sweep_heatmap(heat_csv, summary);
  write_text(a.out / "cells.csv", long_csv.str());
  write_text(a.out / "heatmap.csv", heat_csv.str());
  json manifest_cfg{{"noise", spec.noise_levels},
                    {"samples", spec.sample_counts},
                    {"discovery", discovery_spec_to_json(spec.discovery)}};
  write_json(a.out / "manifest.json", make_manifest("sweep", manifest_cfg, spec.seeds));
  std::cout << heat_csv.str();
  return ok;
}

int run_report(const fs::path& dir) {
  const json report = read_json(dir / "report.json");
  json summary;
  summary["run"] = dir.string();
  summary["sample_count"] = report.value("sample_count", 0);
  summary["warnings"] = report.value("warnings", json::array());
  summary["targets"] = json::array();
  std::ostringstream csv;
  csv << "target,iteration,n_active,residual,removed,selected\n" << std::setprecision(17);
  try {
    for (const auto& m : report.at("models")) {
      const auto field = m.at("target_field").get<std::string>();
      const auto& tr = report.at("traces").at(field);
      json residuals = json::array();
      for (const auto& it : tr.at("iterations")) {
        residuals.push_back(it.at("residual"));
        const bool selected = it.at("iteration") == tr.at("selected_iteration");
        csv << field << ',' << it.at("iteration").get<std::size_t>() << ',' << it.at("active").size() << ','
            << it.at("residual").get<double>() << ",\"" << (it.at("removed").is_null() ? "" : it.at("removed").get<std::string>())
            << "\"," << (selected ? 1 : 0) << '\n';
      }
      summary["targets"].push_back({{"target", field},
                                    {"equation", m.at("equation")},
                                    {"terms", m.at("terms").size()},
                                    {"selection_rule", tr.at("selection_rule")},
                                    {"selected_iteration", tr.at("selected_iteration")},
                                    {"residual_history", residuals}});
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed run report: " + std::string(e.what()));
  }
  if (fs::exists(dir / "validation.json")) summary["validation"] = read_json(dir / "validation.json");
  write_json(dir / "summary.json", summary);
  write_text(dir / "summary.csv", csv.str());
  std::cout << summary.dump(2) << '\n';
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse PDE discovery by backward elimination of library terms"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Simulate a benchmark and save the data set");
  g->add_option("benchmark", gen.benchmark, "kdv | burgers-hyper | modified-ks | rd2d | custom-model")->required();
  g->add_option("--config", gen.config, "Benchmark config JSON")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output directory");
  g->add_option("--resolution", gen.resolution, "Grid preset (\"full\" for 4048-point Burgers)");

  DiscoverArgs disc;
  auto* d = app.add_subcommand("discover", "Prune a candidate library down to a PDE");
  d->add_option("--data", disc.data, "Data set path (stem, .json or .bin)")->required();
  d->add_option("--library-spec", disc.library_spec, "Discovery spec JSON")->check(CLI::ExistingFile);
  d->add_option("--tau", disc.tau, "Residual-ratio threshold");
  d->add_option("--samples", disc.samples, "Sample count or \"all\"");
  d->add_option("--seed", disc.seed, "Sampling seed");
  d->add_option("--noise", disc.noise, "Relative noise level added before discovery");
  d->add_option("--out", disc.out, "Run directory");

  BaselineArgs base;
  auto* b = app.add_subcommand("baseline", "Run STLSQ or TrainSTRidge on the same library");
  b->add_option("--method", base.method, "stlsq | stridge")->required()->check(CLI::IsMember({"stlsq", "stridge"}));
  b->add_option("--data", base.data, "Data set path")->required();
  b->add_option("--params", base.params, "Method parameters JSON")->check(CLI::ExistingFile);
  b->add_option("--library-spec", base.library_spec, "Discovery spec JSON")->check(CLI::ExistingFile);
  b->add_option("--threshold", base.threshold, "STLSQ threshold");
  b->add_option("--out", base.out, "Model JSON output (default: stdout)");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "Integrate a model and compare with reference data");
  v->add_option("--model", val.model, "Model JSON (single model, list or discovery report)")->required();
  v->add_option("--reference", val.reference, "Reference data set")->required();
  v->add_option("--reference-model", val.reference_model, "Reference equations JSON (default: data set metadata)");
  v->add_option("--integrator", val.integrator, "auto | etdrk4 | rk4");
  v->add_option("--dt", val.dt, "Integration step");
  v->add_option("--out", val.out, "Report JSON output");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Noise level by sample count grid");
  s->add_option("--config", sw.config, "Sweep config JSON")->check(CLI::ExistingFile);
  s->add_option("--data", sw.data, "Clean data set (default: simulate the benchmark)");
  s->add_option("--benchmark", sw.benchmark, "Benchmark simulated when no data is given");
  s->add_option("--noise", sw.noise, "Noise levels: start:stop:count or a comma list");
  s->add_option("--samples", sw.samples, "Comma-separated sample counts");
  s->add_option("--seed", sw.seeds, "Comma-separated seeds");
  s->add_option("--out", sw.out, "Output directory");

  fs::path report_dir;
  auto* r = app.add_subcommand("report", "Summarize a discovery run");
  r->add_option("--run", report_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }

  try {
    if (*g) return run_generate(gen);
    if (*d) return run_discover(disc);
    if (*b) return run_baseline(base);
    if (*v) return run_validate(val);
    if (*s) return run_sweep_command(sw);
    if (*r) return run_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return numerical_abort;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return internal_error;
  }
  return internal_error;
}
