#include "sdecomp/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "sdecomp/report.hpp"

namespace sdecomp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Reads an object field by field and rejects whatever was not read.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <typename T>
  T req(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing required field " + at(key));
    return get<T>(key);
  }

  template <typename T>
  T opt(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return get<T>(key);
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing required field " + at(key));
    return Reader(j_.at(key), at(key));
  }

  void mark(const std::string& key) { seen_.insert(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + at(it.key()));
  }

  [[nodiscard]] std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "config" : path_; }

  template <typename T>
  T get(const std::string& key) {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>)
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        if (!v.is_array()) throw ConfigError("");
        for (const auto& e : v)
          if (!e.is_string()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const ConfigError&) {
      throw ConfigError("wrong type for " + at(key));
    } catch (const json::exception&) {
      throw ConfigError("wrong type for " + at(key));
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

RoleMap parse_roles(Reader r) {
  RoleMap roles;
  Reader g = r.child("group");
  roles.group.column = g.req<std::string>("column");
  roles.group.reference = g.req<std::string>("reference");
  roles.group.comparisons = g.req<std::vector<std::string>>("comparisons");
  g.done();
  roles.baseline = r.opt<std::vector<std::string>>("baseline", {});
  roles.pre_confounders = r.opt<std::vector<std::string>>("pre_confounders", {});
  roles.system_factor = r.req<std::string>("system_factor");
  roles.intermediate_confounders = r.opt<std::vector<std::string>>("intermediate_confounders", {});
  roles.individual_factor = r.req<std::string>("individual_factor");
  roles.outcome = r.req<std::string>("outcome");
  roles.allowable_A = r.opt<std::vector<std::string>>("allowable_A", {});
  roles.allowable_M = r.opt<std::vector<std::string>>("allowable_M", {});
  if (r.has("cluster")) roles.cluster = r.req<std::string>("cluster");
  r.mark("cluster");
  r.done();
  try {
    roles.validate();
  } catch (const DataError& e) {
    throw ConfigError(std::string("roles: ") + e.what());
  }
  return roles;
}

FactorIntervention parse_factor(Reader r) {
  const std::string mode = r.opt<std::string>("mode", "equalize");
  FactorIntervention f;
  if (mode == "equalize") {
    if (r.has("reference_level")) f.reference_level = r.req<std::string>("reference_level");
    r.mark("reference_level");
  } else if (mode == "set_value") {
    f.mode = FactorIntervention::Mode::set_value;
    f.level = r.req<int>("level");
  } else {
    throw ConfigError("unknown mode '" + mode + "' at " + r.at("mode"));
  }
  r.done();
  return f;
}

InterventionSpec parse_intervention(Reader r) {
  InterventionSpec s;
  if (r.has("A")) s.A = parse_factor(r.child("A"));
  if (r.has("M")) s.M = parse_factor(r.child("M"));
  r.mark("A");
  r.mark("M");
  if (r.has("integration")) {
    Reader i = r.child("integration");
    const std::string mode = i.opt<std::string>("mode", "marginalize");
    if (mode == "draw") {
      s.integration = Integration::draw(i.req<int>("n_draws"), i.opt<std::uint64_t>("seed", 0));
    } else if (mode != "marginalize") {
      throw ConfigError("unknown integration mode '" + mode + "'");
    }
    i.done();
  }
  r.mark("integration");
  s.literal_tilde_a = r.opt<bool>("literal_tilde_a", false);
  r.done();
  s.validate();
  return s;
}

GbtParams parse_gbt(Reader r) {
  GbtParams p;
  p.n_trees = r.opt<int>("n_trees", p.n_trees);
  p.learning_rate = r.opt<double>("learning_rate", p.learning_rate);
  p.max_depth = r.opt<int>("max_depth", p.max_depth);
  p.min_child_weight = r.opt<double>("min_child_weight", p.min_child_weight);
  p.l2_lambda = r.opt<double>("l2_lambda", p.l2_lambda);
  p.subsample = r.opt<double>("subsample", p.subsample);
  r.done();
  p.validate();
  return p;
}

ModelSpec parse_model(Reader r) {
  ModelSpec m;
  m.family = parse_family(r.req<std::string>("family"));
  m.formula = FeatureFormula::parse(r.req<std::vector<std::string>>("formula"));
  if (is_gbt(m.family)) {
    m.gbt = r.has("gbt") ? parse_gbt(r.child("gbt")) : GbtParams{};
  } else if (r.has("gbt")) {
    throw ConfigError("gbt parameters given for non-gbt family at " + r.at("gbt"));
  }
  r.mark("gbt");
  r.done();
  m.validate();
  return m;
}

NuisanceSpecs parse_models(Reader r) {
  NuisanceSpecs s;
  s.pi_A = parse_model(r.child("pi_A"));
  s.pi_M = parse_model(r.child("pi_M"));
  s.mu = parse_model(r.child("mu"));
  s.nu = parse_model(r.child("nu"));
  s.intervention = parse_family(r.opt<std::string>("intervention_family", "logistic_glm"));
  r.done();
  s.validate();
  return s;
}

std::vector<EstimatorKind> parse_estimators(Reader& r, const std::vector<EstimatorKind>& fallback) {
  if (!r.has("estimators")) {
    r.mark("estimators");
    return fallback;
  }
  std::vector<EstimatorKind> out;
  for (const auto& s : r.req<std::vector<std::string>>("estimators")) out.push_back(parse_estimator(s));
  if (out.empty()) throw ConfigError("estimators must not be empty");
  return out;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out << text;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create output directory '" + p.string() + "': " + ec.message());
  return p;
}

int cmd_analyze(const std::string& config, const std::string& out_dir, int jobs) {
  const AnalyzeConfig cfg = parse_analyze_config(read_json(config));
  const fs::path out = prepare_out(out_dir);
  fs::path data = cfg.data;
  if (data.is_relative() && !fs::exists(data)) data = fs::path(config).parent_path() / data;
  const LoadResult loaded = load_csv(data.string(), cfg.analysis.roles, cfg.missing);
  try {
    json report{{"load_report", to_json(loaded.report)}};
    std::ostringstream csv;
    if (cfg.bootstrap) {
      BootstrapOptions b = *cfg.bootstrap;
      b.jobs = jobs;
      const InferenceReport inf = bootstrap(loaded.data, cfg.analysis, b);
      report["point"] = to_json(inf.point);
      report["inference"] = to_json(inf);
      write_report_csv(inf.point, &inf, csv);
    } else {
      const AnalysisResult res = run_estimation(loaded.data, cfg.analysis, jobs);
      report["point"] = to_json(res);
      report["inference"] = nullptr;
      write_report_csv(res, nullptr, csv);
    }
    write_text(out / "report.json", report.dump(2) + "\n");
    write_text(out / "report.csv", csv.str());
  } catch (const EstimationError& e) {
    write_text(out / "diagnostics.json", json{{"error", e.what()}, {"load_report", to_json(loaded.report)}}.dump(2) + "\n");
    throw;
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config, const std::string& out_dir, int jobs) {
  const SimulationConfig cfg = parse_simulate_config(read_json(config));
  const fs::path out = prepare_out(out_dir);
  const SimulationResult sim = run_simulation(cfg, jobs);
  std::ostringstream est, met;
  write_estimates_csv(sim, est);
  write_metrics_csv(sim, met);
  write_text(out / "estimates.csv", est.str());
  write_text(out / "metrics.csv", met.str());
  write_text(out / "metadata.json", simulation_metadata(sim).dump(2) + "\n");
  return kExitOk;
}

int cmd_oracle(const std::string& config, const std::string& out_dir) {
  const OracleConfig cfg = parse_oracle_config(read_json(config));
  json j{{"N", cfg.N}, {"seed", cfg.seed}, {"null_intervention", cfg.null_intervention}};
  json results = json::object();
  std::vector<Convention> convs;
  if (cfg.convention) convs = {*cfg.convention};
  else convs = {Convention::none, Convention::baseline_C};
  for (Convention c : convs) {
    const OracleResult o = true_value_oracle(cfg.N, cfg.seed, c, cfg.null_intervention);
    results[to_string(c)] = to_json(o);
    std::printf("convention %-10s delta_true = %.4f (MC SE %.4f)  psi_true = %.4f  tau_true = %.4f\n", to_string(c),
                o.delta, o.se_delta, o.psi, o.tau);
  }
  j["results"] = results;
  if (!out_dir.empty()) write_text(prepare_out(out_dir) / "oracle.json", j.dump(2) + "\n");
  return kExitOk;
}

int cmd_generate(const std::string& config, const std::string& out_dir) {
  const GenerateConfig cfg = parse_generate_config(read_json(config));
  fs::path target = cfg.out;
  if (target.is_relative() && !out_dir.empty()) target = prepare_out(out_dir) / target;
  const Dataset ds = generate_dgp(cfg.n, cfg.seed);
  std::ofstream out(target, std::ios::binary);
  if (!out) throw DataError("cannot write '" + target.string() + "'");
  write_csv(ds, out);
  std::printf("wrote %lld rows to %s\n", static_cast<long long>(ds.rows()), target.string().c_str());
  return kExitOk;
}

}  // namespace

AnalyzeConfig parse_analyze_config(const json& j) {
  Reader r(j, "");
  AnalyzeConfig c;
  c.data = r.req<std::string>("data");
  const std::string missing = r.opt<std::string>("missing", "reject");
  if (missing == "drop_rows") c.missing = MissingPolicy::drop_rows;
  else if (missing != "reject") throw ConfigError("missing must be 'reject' or 'drop_rows'");
  auto& a = c.analysis;
  a.roles = parse_roles(r.child("roles"));
  if (r.has("intervention")) a.intervention = parse_intervention(r.child("intervention"));
  r.mark("intervention");
  a.models = parse_models(r.child("models"));
  a.estimators = parse_estimators(r, a.estimators);
  a.K = r.opt<int>("K", 5);
  a.cluster_folds = r.opt<bool>("cluster_folds", false);
  a.seed = r.opt<std::uint64_t>("seed", 0);
  a.weighting.normalize = r.opt<bool>("normalize", false);
  if (r.has("trim")) {
    const json& t = r.raw("trim");
    if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number())
      throw ConfigError("trim must be [lo, hi] percentiles");
    a.weighting.trim = std::make_pair(t[0].get<double>(), t[1].get<double>());
  }
  r.mark("trim");
  if (r.has("bootstrap")) {
    Reader b = r.child("bootstrap");
    BootstrapOptions o;
    o.B = b.opt<int>("B", 500);
    o.clustered = b.opt<bool>("clustered", false);
    o.rerandomize_folds = b.opt<bool>("rerandomize_folds", true);
    o.level = b.opt<double>("level", 0.95);
    o.seed = b.opt<std::uint64_t>("seed", a.seed);
    b.done();
    o.validate();
    if (o.clustered && !a.roles.cluster)
      throw ConfigError("bootstrap.clustered requires roles.cluster (no cluster column named)");
    c.bootstrap = o;
  }
  r.mark("bootstrap");
  r.done();
  if (a.cluster_folds && !a.roles.cluster) throw ConfigError("cluster_folds requires roles.cluster");
  a.validate();
  return c;
}

SimulationConfig parse_simulate_config(const json& j) {
  Reader r(j, "");
  SimulationConfig c;
  c.scenarios = r.opt<std::vector<int>>("scenarios", c.scenarios);
  if (r.has("methods")) {
    c.methods.clear();
    for (const auto& m : r.req<std::vector<std::string>>("methods")) c.methods.push_back(parse_method(m));
  }
  r.mark("methods");
  c.estimators = parse_estimators(r, c.estimators);
  if (r.has("n")) {
    c.n.clear();
    for (long long v : r.req<std::vector<long long>>("n")) c.n.push_back(static_cast<Index>(v));
  }
  r.mark("n");
  c.replicates = r.opt<int>("replicates", c.replicates);
  c.K = r.opt<int>("K", c.K);
  c.seed = r.opt<std::uint64_t>("seed", c.seed);
  c.convention = parse_convention(r.opt<std::string>("convention", "baseline_C"));
  if (r.has("truth")) c.truth = r.req<double>("truth");
  r.mark("truth");
  c.oracle_N = static_cast<Index>(r.opt<long long>("oracle_N", c.oracle_N));
  c.oracle_seed = r.opt<std::uint64_t>("oracle_seed", c.oracle_seed);
  c.scenario.misspecified_keep_z = r.opt<bool>("misspecified_keep_z", true);
  if (r.has("gbt")) c.scenario.gbt = parse_gbt(r.child("gbt"));
  r.mark("gbt");
  if (r.has("intervention")) c.intervention = parse_intervention(r.child("intervention"));
  r.mark("intervention");
  r.done();
  c.validate();
  return c;
}

OracleConfig parse_oracle_config(const json& j) {
  Reader r(j, "");
  OracleConfig c;
  c.N = static_cast<Index>(r.opt<long long>("N", c.N));
  c.seed = r.opt<std::uint64_t>("seed", c.seed);
  const std::string conv = r.opt<std::string>("convention", "both");
  if (conv != "both") c.convention = parse_convention(conv);
  c.null_intervention = r.opt<bool>("null_intervention", false);
  r.done();
  if (c.N < 2) throw ConfigError("N must be >= 2");
  return c;
}

GenerateConfig parse_generate_config(const json& j) {
  Reader r(j, "");
  GenerateConfig c;
  c.n = static_cast<Index>(r.req<long long>("n"));
  c.seed = r.opt<std::uint64_t>("seed", c.seed);
  c.out = r.opt<std::string>("out", c.out);
  r.done();
  if (c.n < 1) throw ConfigError("n must be >= 1");
  return c;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Causal decomposition of group disparities under interventions on two target factors"};
  app.require_subcommand(1);
  std::string config, out;
  int jobs = 1;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    return sub;
  };
  auto* analyze = add("analyze", "estimate the decomposition on a CSV dataset");
  auto* simulate = add("simulate", "run a simulation grid");
  auto* oracle = add("oracle", "Monte Carlo truth from the structural equations");
  auto* generate = add("generate", "write a synthetic dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*analyze) return cmd_analyze(config, out, jobs);
    if (*simulate) return cmd_simulate(config, out, jobs);
    if (*oracle) return cmd_oracle(config, out);
    if (*generate) return cmd_generate(config, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return kExitEstimation;
  }
  return kExitConfig;
}

}  // namespace sdecomp
