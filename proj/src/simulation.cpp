#include "sdecomp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sdecomp/parallel.hpp"
#include "sdecomp/random.hpp"

namespace sdecomp {

const char* to_string(Convention c) { return c == Convention::none ? "none" : "baseline_C"; }

Convention parse_convention(const std::string& s) {
  if (s == "none") return Convention::none;
  if (s == "baseline_C") return Convention::baseline_C;
  throw ConfigError("unknown convention '" + s + "' (expected none or baseline_C)");
}

const char* to_string(SimMethod m) {
  switch (m) {
    case SimMethod::glm: return "glm";
    case SimMethod::gbt: return "gbt";
    case SimMethod::gbt_crossfit: return "gbt_crossfit";
  }
  return "?";
}

SimMethod parse_method(const std::string& s) {
  if (s == "glm") return SimMethod::glm;
  if (s == "gbt") return SimMethod::gbt;
  if (s == "gbt_crossfit") return SimMethod::gbt_crossfit;
  throw ConfigError("unknown method '" + s + "'");
}

RoleMap dgp_roles(Convention convention) {
  RoleMap r;
  r.group = {"R", "0", {"1"}};
  r.baseline = {"C"};
  r.pre_confounders = {"X1", "X2", "X3"};
  r.system_factor = "A";
  r.intermediate_confounders = {"Z"};
  r.individual_factor = "M";
  r.outcome = "Y";
  if (convention == Convention::baseline_C) {
    r.allowable_A = {"C"};
    r.allowable_M = {"C"};
  }
  return r;
}

namespace {

double expit(double v) { return v >= 0 ? 1 / (1 + std::exp(-v)) : std::exp(v) / (1 + std::exp(v)); }

// structural equations, noise passed in
double lin_A(double r, double c, double x1, double x2, double x3) {
  return -0.8 + r + 1.5 * c + x1 + 0.2 * x2 - 0.5 * x3 + r * x3;
}
double eq_Z(double r, double c, double x1, double x2, double x3, double a, double e) {
  return -0.5 + 0.2 * r + 0.5 * c - 0.5 * x1 + 0.7 * x2 + 0.5 * x3 + 1.2 * a + e;
}
double lin_M(double r, double c, double x1, double x2, double x3, double a, double z) {
  return -1 + 2 * r + 0.2 * a + c - x1 - 0.2 * x2 + 1.5 * x3 + r * x2 + 0.5 * z;
}
double eq_Y(double r, double c, double x1, double x2, double x3, double a, double z, double m, double e) {
  return 1 - 0.5 * r + 0.7 * m - 0.2 * r * m + 0.5 * r * m * a + a + c - x1 + 0.5 * x2 - 0.5 * x3 - 0.5 * z + e;
}

struct Population {
  std::vector<double> R, C, X1, X2, X3, A, Z, M, Y;
  explicit Population(Index n) {
    for (auto* v : {&R, &C, &X1, &X2, &X3, &A, &Z, &M, &Y}) v->resize(static_cast<std::size_t>(n));
  }
};

Population draw_population(Index n, std::mt19937_64& rng) {
  Population p(n);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < p.R.size(); ++i) {
    const double c = unif(rng) < 0.4;
    const double r = unif(rng) < expit(0.5 - 0.5 * c);
    const double x1 = norm(rng), x2 = norm(rng), x3 = norm(rng);
    const double a = unif(rng) < expit(lin_A(r, c, x1, x2, x3));
    const double z = eq_Z(r, c, x1, x2, x3, a, norm(rng));
    const double m = unif(rng) < expit(lin_M(r, c, x1, x2, x3, a, z));
    const double y = eq_Y(r, c, x1, x2, x3, a, z, m, norm(rng));
    p.R[i] = r, p.C[i] = c, p.X1[i] = x1, p.X2[i] = x2, p.X3[i] = x3;
    p.A[i] = a, p.Z[i] = z, p.M[i] = m, p.Y[i] = y;
  }
  return p;
}

Column numeric(const std::string& name, const std::vector<double>& v, ColumnType type) {
  Column c;
  c.name = name;
  c.type = type;
  c.values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
  return c;
}

}  // namespace

Dataset generate_dgp(Index n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("generate: n must be >= 1");
  std::mt19937_64 rng(seed);
  const Population p = draw_population(n, rng);
  Dataset ds;
  Column r = numeric("R", p.R, ColumnType::categorical);
  r.levels = {"0", "1"};
  ds.add_column(std::move(r));
  ds.add_column(numeric("C", p.C, ColumnType::binary));
  ds.add_column(numeric("X1", p.X1, ColumnType::continuous));
  ds.add_column(numeric("X2", p.X2, ColumnType::continuous));
  ds.add_column(numeric("X3", p.X3, ColumnType::continuous));
  ds.add_column(numeric("A", p.A, ColumnType::binary));
  ds.add_column(numeric("Z", p.Z, ColumnType::continuous));
  ds.add_column(numeric("M", p.M, ColumnType::binary));
  ds.add_column(numeric("Y", p.Y, ColumnType::continuous));
  return ds;
}

std::array<Eigen::VectorXd, 3> misspecify_features(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                                                   const Eigen::VectorXd& x3) {
  return {apply_transform("xm1", {&x1}), apply_transform("xm2", {&x1, &x2}), apply_transform("xm3", {&x1, &x3})};
}

NuisanceSpecs scenario_specs(int scenario, SimMethod method, const ScenarioOptions& opts) {
  if (scenario < 1 || scenario > 4) throw ConfigError("scenario must be 1, 2, 3 or 4, got " + std::to_string(scenario));
  // which of (pi_A, pi_M, mu, nu) are correctly specified
  static constexpr bool kCorrect[4][4] = {
      {false, false, true, true},
      {true, true, false, false},
      {true, false, true, false},
      {false, false, false, false},
  };
  const bool* ok = kCorrect[scenario - 1];
  const bool gbt = method != SimMethod::glm;

  const std::vector<std::string> x{"X1", "X2", "X3"};
  const std::vector<std::string> xm{"xm1(X1)", "xm2(X1,X2)", "xm3(X1,X3)"};
  auto build = [&](bool correct, std::vector<std::string> head, std::vector<std::string> tail_correct,
                   std::vector<std::string> tail_mis) {
    std::vector<std::string> terms;
    if (!gbt) terms.push_back("1");
    terms.insert(terms.end(), head.begin(), head.end());
    const auto& xs = correct ? x : xm;
    terms.insert(terms.end(), xs.begin(), xs.end());
    const auto& tail = correct ? tail_correct : tail_mis;
    terms.insert(terms.end(), tail.begin(), tail.end());
    return FeatureFormula::parse(terms);
  };
  const std::vector<std::string> z_mis = opts.misspecified_keep_z ? std::vector<std::string>{"Z"}
                                                                  : std::vector<std::string>{};
  // interaction terms only enter the GLM versions; trees find them on their own
  auto inter = [&](std::vector<std::string> t) { return gbt ? std::vector<std::string>{} : t; };

  const FeatureFormula fA = build(ok[0], {"R", "C"}, inter({"R:X3"}), {});
  const FeatureFormula fM = build(ok[1], {"R", "A", "C"}, [&] {
    auto t = std::vector<std::string>{"Z"};
    for (auto& s : inter({"R:X2"})) t.push_back(s);
    return t;
  }(), z_mis);
  const FeatureFormula fY = build(ok[2], {"R", "M", "A", "C"}, [&] {
    auto t = std::vector<std::string>{"Z"};
    for (auto& s : inter({"R:M", "R:M:A"})) t.push_back(s);
    return t;
  }(), z_mis);
  const FeatureFormula fN = build(ok[3], {"R", "A", "C"}, inter({"R:A", "R:C", "A:C", "R:A:C"}), {});

  NuisanceSpecs s;
  if (gbt) {
    s.pi_A = ModelSpec::boosted(ModelFamily::gbt_binary, fA, opts.gbt);
    s.pi_M = ModelSpec::boosted(ModelFamily::gbt_binary, fM, opts.gbt);
    s.mu = ModelSpec::boosted(ModelFamily::gbt_regression, fY, opts.gbt);
    s.nu = ModelSpec::boosted(ModelFamily::gbt_regression, fN, opts.gbt);
  } else {
    s.pi_A = ModelSpec::glm(ModelFamily::logistic_glm, fA);
    s.pi_M = ModelSpec::glm(ModelFamily::logistic_glm, fM);
    s.mu = ModelSpec::glm(ModelFamily::linear_glm, fY);
    s.nu = ModelSpec::glm(ModelFamily::linear_glm, fN);
  }
  return s;
}

OracleResult true_value_oracle(Index N, std::uint64_t seed, Convention convention, bool null_intervention) {
  if (N < 2) throw ConfigError("oracle: N must be >= 2");
  std::mt19937_64 rng(seed);
  const Population p = draw_population(N, rng);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t n = p.R.size();

  // intervention laws: reference-group proportions within allowable strata
  double sa[2] = {0, 0}, sm[2] = {0, 0}, cnt[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    if (p.R[i] != 0) continue;
    const int k = convention == Convention::baseline_C ? static_cast<int>(p.C[i]) : 0;
    sa[k] += p.A[i];
    sm[k] += p.M[i];
    cnt[k] += 1;
  }
  if (convention == Convention::none) {
    sa[1] = sa[0], sm[1] = sm[0], cnt[1] = cnt[0];
  }

  OracleResult out;
  out.N = N;
  double sy = 0, sy2 = 0, sd = 0, sd2 = 0, sp = 0, sp2 = 0, yall = 0, yall2 = 0;
  // per-stratum sums for the adjusted contrast
  double ys[2][2] = {{0, 0}, {0, 0}}, ys2[2][2] = {{0, 0}, {0, 0}}, ns[2][2] = {{0, 0}, {0, 0}};
  Index n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = p.R[i], c = p.C[i], x1 = p.X1[i], x2 = p.X2[i], x3 = p.X3[i];
    yall += p.Y[i];
    yall2 += p.Y[i] * p.Y[i];
    const int ci = static_cast<int>(c), ri = static_cast<int>(r);
    ys[ri][ci] += p.Y[i];
    ys2[ri][ci] += p.Y[i] * p.Y[i];
    ns[ri][ci] += 1;
    if (r != 1) continue;
    ++n1;
    const int k = static_cast<int>(c);
    double a, z, m;
    if (null_intervention) {
      a = unif(rng) < expit(lin_A(r, c, x1, x2, x3));
      z = eq_Z(r, c, x1, x2, x3, a, norm(rng));
      m = unif(rng) < expit(lin_M(r, c, x1, x2, x3, a, z));
    } else {
      a = unif(rng) < sa[k] / cnt[k];
      z = eq_Z(r, c, x1, x2, x3, a, norm(rng));
      m = unif(rng) < sm[k] / cnt[k];
    }
    const double ycf = eq_Y(r, c, x1, x2, x3, a, z, m, norm(rng));
    const double d = p.Y[i] - ycf;
    sy += p.Y[i];
    sy2 += p.Y[i] * p.Y[i];
    sp += ycf;
    sp2 += ycf * ycf;
    sd += d;
    sd2 += d * d;
  }
  if (n1 < 2) throw EstimationError("oracle: too few comparison-group units");
  const double m1 = static_cast<double>(n1);
  auto sd_of = [](double s, double s2, double k) { return std::sqrt(std::max(0.0, (s2 - s * s / k) / (k - 1))); };
  out.n_comparison = n1;
  out.mean_y = sy / m1;
  out.psi = sp / m1;
  out.delta = sd / m1;
  out.se_psi = sd_of(sp, sp2, m1) / std::sqrt(m1);
  out.se_delta = sd_of(sd, sd2, m1) / std::sqrt(m1);
  out.mean_y_all = yall / static_cast<double>(n);
  out.se_mean_y_all = sd_of(yall, yall2, static_cast<double>(n)) / std::sqrt(static_cast<double>(n));

  // The regression coefficient on R with C as a covariate converges to the stratum
  // contrasts weighted by P(c) p_c (1 - p_c), p_c = P(R = 1 | C = c).
  double wsum = 0, tau = 0, var = 0;
  for (int c = 0; c < 2; ++c) {
    const double pc = expit(0.5 - 0.5 * c);
    const double w = (c == 1 ? 0.4 : 0.6) * pc * (1 - pc);
    const double d = ys[1][c] / ns[1][c] - ys[0][c] / ns[0][c];
    const double v = std::pow(sd_of(ys[1][c], ys2[1][c], ns[1][c]), 2) / ns[1][c] +
                     std::pow(sd_of(ys[0][c], ys2[0][c], ns[0][c]), 2) / ns[0][c];
    wsum += w;
    tau += w * d;
    var += w * w * v;
  }
  out.tau = tau / wsum;
  out.se_tau = std::sqrt(var) / wsum;
  return out;
}

void SimulationConfig::validate() const {
  if (scenarios.empty() || methods.empty() || estimators.empty() || n.empty())
    throw ConfigError("simulation grid has an empty axis");
  for (int s : scenarios)
    if (s < 1 || s > 4) throw ConfigError("scenario must be 1..4");
  for (Index v : n)
    if (v < 20) throw ConfigError("simulation n must be >= 20");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (std::find(methods.begin(), methods.end(), SimMethod::gbt_crossfit) != methods.end() && K < 2)
    throw ConfigError("gbt_crossfit needs K >= 2");
  if (oracle_N < 2) throw ConfigError("oracle_N must be >= 2");
  scenario.gbt.validate();
  intervention.validate();
}

Metrics compute_metrics(const std::vector<double>& estimates, double truth) {
  std::vector<double> e, sq;
  for (double v : estimates)
    if (std::isfinite(v)) {
      e.push_back(v);
      sq.push_back((v - truth) * (v - truth));
    }
  if (e.empty()) throw EstimationError("compute_metrics: no finite estimates");
  auto median = [](std::vector<double> v) {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(h), v.end());
    const double hi = v[h];
    if (v.size() % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(h));
    return (lo + hi) / 2;
  };
  Metrics m;
  m.count = static_cast<Index>(e.size());
  m.median_bias = median(e) - truth;
  m.median_rmse = std::sqrt(median(sq));
  return m;
}

namespace {

enum : std::uint64_t { kData = 0xda7a, kModels = 0x30de1 };

}  // namespace

CellResult run_replicates(const SimulationConfig& cfg, int scenario, SimMethod method, Index n, int jobs) {
  cfg.validate();
  CellResult cell;
  cell.scenario = scenario;
  cell.method = method;
  cell.n = n;

  AnalysisConfig ac;
  ac.roles = dgp_roles(cfg.convention);
  ac.intervention = cfg.intervention;
  ac.models = scenario_specs(scenario, method, cfg.scenario);
  ac.estimators = cfg.estimators;
  ac.K = method == SimMethod::gbt_crossfit ? cfg.K : 0;
  const std::uint64_t cell_stream = kModels + static_cast<std::uint64_t>(scenario) * 16 +
                                    static_cast<std::uint64_t>(method);

  const std::size_t k = cfg.estimators.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  cell.delta.assign(static_cast<std::size_t>(cfg.replicates), std::vector<double>(k, nan));
  std::vector<std::string> errors(static_cast<std::size_t>(cfg.replicates));
  parallel_for(cell.delta.size(), jobs, [&](std::size_t r) {
    // the same replicate index sees the same sample in every scenario and method
    const Dataset ds = generate_dgp(n, derive_seed(cfg.seed, kData + static_cast<std::uint64_t>(n), r));
    AnalysisConfig c = ac;
    c.seed = derive_seed(cfg.seed, cell_stream, r);
    try {
      const AnalysisResult res = run_estimation(ds, c, 1);
      for (std::size_t j = 0; j < k; ++j) cell.delta[r][j] = res.records[j].delta;
    } catch (const Error& e) {
      errors[r] = "replicate " + std::to_string(r + 1) + ": " + e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) {
      ++cell.failed;
      cell.failures.push_back(e);
    }
  return cell;
}

SimulationResult run_simulation(const SimulationConfig& cfg, int jobs) {
  cfg.validate();
  SimulationResult out;
  out.config = cfg;
  if (cfg.truth) {
    out.truth = *cfg.truth;
  } else {
    out.oracle = true_value_oracle(cfg.oracle_N, cfg.oracle_seed, cfg.convention);
    out.truth = out.oracle->delta;
  }
  for (int s : cfg.scenarios)
    for (SimMethod m : cfg.methods)
      for (Index n : cfg.n) {
        CellResult cell = run_replicates(cfg, s, m, n, jobs);
        for (std::size_t j = 0; j < cfg.estimators.size(); ++j) {
          std::vector<double> col;
          for (const auto& row : cell.delta) col.push_back(row[j]);
          cell.metrics.push_back(compute_metrics(col, out.truth));
        }
        out.cells.push_back(std::move(cell));
      }
  return out;
}

}  // namespace sdecomp
