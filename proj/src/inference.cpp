#include "sdecomp/inference.hpp"

#include <cmath>
#include <map>
#include <random>

#include "sdecomp/parallel.hpp"
#include "sdecomp/random.hpp"

namespace sdecomp {

double normal_p_value(double t) { return std::erfc(std::fabs(t) / std::sqrt(2.0)); }

QuantitySummary summarize(const std::vector<double>& samples, double estimate, double level) {
  if (samples.empty()) throw EstimationError("summarize: no bootstrap samples");
  QuantitySummary s;
  s.estimate = estimate;
  double mean = 0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  double ss = 0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  s.se = samples.size() > 1 ? std::sqrt(ss / static_cast<double>(samples.size() - 1)) : 0.0;
  const double alpha = 1 - level;
  s.ci_lo = order_quantile(samples, alpha / 2);
  s.ci_hi = order_quantile(samples, 1 - alpha / 2);
  if (s.se > 0) {
    s.t = estimate / s.se;
    s.p = normal_p_value(*s.t);
  } else {
    s.zero_se = true;
    if (estimate == 0) {
      s.t = 0.0;
      s.p = 1.0;
    }
  }
  return s;
}

void BootstrapOptions::validate() const {
  if (B < 2) throw ConfigError("bootstrap needs B >= 2");
  if (!(level > 0 && level < 1)) throw ConfigError("confidence level must lie in (0, 1)");
}

std::vector<Index> resample_rows(const Dataset& ds, const RoleMap& roles, bool clustered, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index n = ds.rows();
  std::vector<Index> rows;
  if (!clustered) {
    std::uniform_int_distribution<Index> pick(0, n - 1);
    rows.resize(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    return rows;
  }
  if (!roles.cluster) throw ConfigError("clustered bootstrap requires a cluster column");
  const auto& id = ds.values(*roles.cluster);
  std::map<double, std::vector<Index>> members;
  for (Index i = 0; i < n; ++i) members[id[i]].push_back(i);
  std::vector<const std::vector<Index>*> clusters;
  for (const auto& [k, v] : members) clusters.push_back(&v);
  std::uniform_int_distribution<std::size_t> pick(0, clusters.size() - 1);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto* m = clusters[pick(rng)];
    rows.insert(rows.end(), m->begin(), m->end());
  }
  return rows;
}

namespace {

enum : std::uint64_t { kBootstrap = 0xb0075, kRetry = 0x2e7, kFolds = 0xf01d };

struct Replicate {
  bool ok = false;
  bool retried = false;
  std::string failure;
  std::vector<EstimateRecord> records;
};

Replicate run_replicate(const Dataset& ds, const AnalysisConfig& cfg, const BootstrapOptions& opts, int b) {
  Replicate rep;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::uint64_t s = attempt == 0 ? derive_seed(opts.seed, kBootstrap, static_cast<std::uint64_t>(b))
                                         : derive_seed(opts.seed, kRetry, static_cast<std::uint64_t>(b));
    try {
      const Dataset sample = ds.subset(resample_rows(ds, cfg.roles, opts.clustered, s));
      AnalysisConfig c = cfg;
      if (opts.rerandomize_folds) c.seed = derive_seed(s, kFolds);
      AnalysisResult r = run_estimation(sample, c, 1);
      if (r.degenerate) {
        rep.failure = "replicate " + std::to_string(b + 1) + ": degenerate nuisance fit";
      } else {
        rep.ok = true;
        rep.records = std::move(r.records);
        return rep;
      }
    } catch (const Error& e) {
      rep.failure = "replicate " + std::to_string(b + 1) + ": " + e.what();
    }
    rep.retried = true;
  }
  return rep;
}

}  // namespace

InferenceReport bootstrap(const Dataset& ds, const AnalysisConfig& cfg, const BootstrapOptions& opts) {
  opts.validate();
  if (opts.clustered && !cfg.roles.cluster)
    throw ConfigError("bootstrap.clustered is set but roles.cluster is missing");
  InferenceReport rep;
  rep.point = run_estimation(ds, cfg, opts.jobs);
  rep.B = opts.B;
  rep.clustered = opts.clustered;
  rep.seed = opts.seed;

  std::vector<Replicate> reps(static_cast<std::size_t>(opts.B));
  parallel_for(reps.size(), opts.jobs,
               [&](std::size_t b) { reps[b] = run_replicate(ds, cfg, opts, static_cast<int>(b)); });

  const auto& point = rep.point.records;
  rep.rows.resize(point.size());
  for (const auto& r : reps) {
    if (r.retried) ++rep.retried;
    if (!r.ok) {
      ++rep.dropped;
      rep.failures.push_back(r.failure);
      continue;
    }
    if (r.records.size() != point.size()) throw EstimationError("bootstrap replicate produced a different layout");
    ++rep.used;
    for (std::size_t j = 0; j < point.size(); ++j) {
      const auto& e = r.records[j];
      rep.rows[j].tau_samples.push_back(e.tau);
      rep.rows[j].delta_samples.push_back(e.delta);
      rep.rows[j].zeta_samples.push_back(e.zeta);
      rep.max_additivity_error = std::max(rep.max_additivity_error, std::fabs(e.tau - e.delta - e.zeta));
    }
  }
  if (rep.used < 2) throw EstimationError("fewer than two bootstrap replicates succeeded");
  for (std::size_t j = 0; j < point.size(); ++j) {
    auto& row = rep.rows[j];
    row.estimator = point[j].estimator;
    row.group = point[j].group;
    row.pct = point[j].pct;
    row.tau = summarize(row.tau_samples, point[j].tau, opts.level);
    row.delta = summarize(row.delta_samples, point[j].delta, opts.level);
    row.zeta = summarize(row.zeta_samples, point[j].zeta, opts.level);
  }
  return rep;
}

}  // namespace sdecomp
