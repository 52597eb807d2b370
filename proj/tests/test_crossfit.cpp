#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "sdecomp/crossfit.hpp"
#include "sdecomp/inference.hpp"
#include "sdecomp/pipeline.hpp"
#include "sdecomp/simulation.hpp"
#include "toy_population.hpp"

using namespace sdecomp;

namespace {

NuisanceSpecs toy_specs() {
  auto logit = [](std::vector<std::string> t) {
    return ModelSpec::glm(ModelFamily::logistic_glm, FeatureFormula::parse(t));
  };
  auto linear = [](std::vector<std::string> t) {
    return ModelSpec::glm(ModelFamily::linear_glm, FeatureFormula::parse(t));
  };
  return {logit({"1", "factorial(R,X,C)"}), logit({"1", "factorial(R,X,A,Z,C)"}),
          linear({"1", "factorial(R,X,A,Z,M,C)"}), linear({"1", "factorial(R,X,A,C)"})};
}

std::vector<Index> rows_of_fold(const std::vector<int>& assignment, int k) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == k) out.push_back(static_cast<Index>(i));
  return out;
}

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

/// Every out-of-fold prediction of the listed rows, concatenated.
std::vector<double> predictions(const NuisanceSet& s, const std::vector<Index>& rows) {
  std::vector<double> out;
  for (Index i : rows)
    for (const auto* v : {&s.pA1, &s.pM1, &s.mu_obs, &s.mu_bar, &s.mu_m[0], &s.mu_m[1], &s.nu_obs, &s.nu_bar,
                          &s.nu_a[0], &s.nu_a[1]})
      out.push_back((*v)[i]);
  return out;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Dataset append_row(const Dataset& ds, Index row, double y) {
  std::vector<Index> idx(static_cast<std::size_t>(ds.rows()));
  for (Index i = 0; i < ds.rows(); ++i) idx[static_cast<std::size_t>(i)] = i;
  idx.push_back(row);
  const Dataset out = ds.subset(idx);
  Eigen::VectorXd v = out.values("Y");
  v[ds.rows()] = y;
  return out.with_values("Y", v);
}

}  // namespace

TEST_CASE("ten rows in two folds") {
  const auto plan = make_folds(10, 2, 1);
  CHECK(plan.fold_sizes() == std::vector<Index>{5, 5});
  CHECK(plan.assignment.size() == 10);
  CHECK_FALSE(plan.cluster_respecting);
}

TEST_CASE("seven rows in three folds") {
  auto sizes = make_folds(7, 3, 4).fold_sizes();
  std::sort(sizes.rbegin(), sizes.rend());
  CHECK(sizes == std::vector<Index>{3, 2, 2});
}

TEST_CASE("clusters stay intact") {
  Eigen::VectorXd cl(10);
  cl << 0, 0, 0, 1, 1, 1, 2, 2, 3, 3;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto plan = make_folds(10, 2, seed, &cl);
    CHECK(plan.cluster_respecting);
    CHECK(plan.fold_sizes() == std::vector<Index>{5, 5});
    for (Index i = 1; i < 10; ++i)
      if (cl[i] == cl[i - 1])
        CHECK(plan.assignment[static_cast<std::size_t>(i)] == plan.assignment[static_cast<std::size_t>(i - 1)]);
  }
}

TEST_CASE("fold plan errors") {
  CHECK_THROWS_AS(make_folds(10, 1, 0), ConfigError);
  CHECK_THROWS_AS(make_folds(3, 4, 0), ConfigError);
  Eigen::VectorXd cl(4);
  cl << 1, 1, 2, 2;
  CHECK_THROWS_AS(make_folds(4, 3, 0, &cl), ConfigError);
}

TEST_CASE("fold plans partition evenly and depend only on the seed") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 300);
    const int K = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min<Index>(n - 1, 9)));
    const auto plan = make_folds(n, K, trial);
    const auto sizes = plan.fold_sizes();
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    CHECK(std::accumulate(sizes.begin(), sizes.end(), Index{0}) == n);
    CHECK(make_folds(n, K, trial).assignment == plan.assignment);
  }
  CHECK(make_folds(100, 5, 1).assignment != make_folds(100, 5, 2).assignment);

  // cluster mode: fold sizes differ by at most the largest cluster
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 50 + static_cast<Index>(rng() % 200);
    Eigen::VectorXd cl(n);
    for (Index i = 0; i < n; ++i) cl[i] = static_cast<double>(rng() % 20);
    std::map<double, Index> count;
    for (Index i = 0; i < n; ++i) ++count[cl[i]];
    Index biggest = 0;
    for (const auto& [id, c] : count) biggest = std::max(biggest, c);
    const auto plan = make_folds(n, 4, trial, &cl);
    const auto sizes = plan.fold_sizes();
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= biggest);
    std::map<double, std::set<int>> folds_of;
    for (Index i = 0; i < n; ++i) folds_of[cl[i]].insert(plan.assignment[static_cast<std::size_t>(i)]);
    for (const auto& [id, f] : folds_of) CHECK(f.size() == 1);
  }
}

TEST_CASE("poisoning one fold's outcomes leaves that fold's predictions unchanged") {
  const Dataset ds = toy::Population{}.sample(2000, 21);
  for (int K : {2, 5}) {
    CAPTURE(K);
    const auto plan = make_folds(ds.rows(), K, 3);
    const NuisanceSet clean = crossfit_nuisances(ds, toy::roles(), toy_specs(), plan, InterventionSpec{}, 9);
    for (int k = 0; k < K; ++k) {
      const auto held = rows_of_fold(plan.assignment, k);
      Eigen::VectorXd y = ds.values("Y");
      for (Index i : held) y[i] += 1000;
      const NuisanceSet poisoned =
          crossfit_nuisances(ds.with_values("Y", y), toy::roles(), toy_specs(), plan, InterventionSpec{}, 9);
      CHECK(same_bits(predictions(clean, held), predictions(poisoned, held)));
      const auto other = rows_of_fold(plan.assignment, (k + 1) % K);
      CHECK_FALSE(same_bits(predictions(clean, other), predictions(poisoned, other)));
    }
  }
}

TEST_CASE("a duplicated extreme row inside fold k does not reach fold k's predictions") {
  const Dataset ds = toy::Population{}.sample(1500, 22);
  const auto plan = make_folds(ds.rows(), 3, 5);
  const NuisanceSet base = crossfit_nuisances(ds, toy::roles(), toy_specs(), plan, InterventionSpec{}, 1);

  // a comparison-group row, so the reference-group intervention fits are untouched
  Index dup = 0;
  while (ds.values("R")[dup] != 1) ++dup;
  const Dataset bigger = append_row(ds, dup, 1e4);
  for (int k = 0; k < 3; ++k) {
    CAPTURE(k);
    const auto held = rows_of_fold(plan.assignment, k);
    for (int land = 0; land < 3; ++land) {
      std::vector<int> assignment = plan.assignment;
      assignment.push_back(land);
      const NuisanceSet probe =
          fit_nuisances_by_fold(bigger, toy::roles(), toy_specs(), InterventionSpec{}, assignment, 3, 1);
      const bool same = same_bits(predictions(base, held), predictions(probe, held));
      if (land == k) CHECK(same);
      else CHECK_FALSE(same);
    }
  }
}

TEST_CASE("provenance, audit and determinism") {
  const Dataset ds = toy::Population{}.sample(1200, 23);
  const auto plan = make_folds(ds.rows(), 4, 8);
  NuisanceOptions one, many;
  many.jobs = 3;
  const NuisanceSet a = crossfit_nuisances(ds, toy::roles(), toy_specs(), plan, InterventionSpec{}, 2, one);
  const NuisanceSet b = crossfit_nuisances(ds, toy::roles(), toy_specs(), plan, InterventionSpec{}, 2, many);
  CHECK(audit_no_leakage(a));
  for (const char* c : {"pi_A", "pi_M", "mu", "nu"}) CHECK(a.provenance.at(c) == Provenance::out_of_fold);
  CHECK(a.provenance.at("pi_star_A") == Provenance::in_sample);
  std::vector<Index> all(static_cast<std::size_t>(ds.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  CHECK(same_bits(predictions(a, all), predictions(b, all)));
  CHECK(same_bits(a.pi_A, b.pi_A));
  CHECK(same_bits(a.pstar_M, b.pstar_M));

  const NuisanceSet in = fit_nuisances(ds, toy::roles(), toy_specs(), InterventionSpec{}, 2);
  CHECK_FALSE(audit_no_leakage(in));

  // corrupt the record: a training row from its own fold fails the audit
  NuisanceSet bad = a;
  bad.folds.training_rows[0].push_back(rows_of_fold(plan.assignment, 0).front());
  CHECK_FALSE(audit_no_leakage(bad));

  CrossFitPlan short_plan = plan;
  short_plan.assignment.pop_back();
  CHECK_THROWS_AS(crossfit_nuisances(ds, toy::roles(), toy_specs(), short_plan, InterventionSpec{}, 2), ConfigError);
}

TEST_CASE("a training fold with one factor level is flagged degenerate") {
  Dataset ds = toy::Population{}.sample(400, 24);
  const auto plan = make_folds(ds.rows(), 2, 1);
  // A = 0 everywhere except fold 0, so fold 0's models train on a single A level
  Eigen::VectorXd a = ds.values("A");
  for (std::size_t i = 0; i < plan.assignment.size(); ++i)
    if (plan.assignment[i] != 0) a[static_cast<Index>(i)] = 0;
  ds = ds.with_values("A", a);
  const NuisanceSet s = crossfit_nuisances(ds, toy::roles(), toy_specs(), plan, InterventionSpec{}, 1);
  CHECK(s.degenerate);
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("cross-fitting changes variance, not the limit") {
  const Dataset ds = generate_dgp(200000, 5);
  AnalysisConfig cfg;
  cfg.roles = dgp_roles(Convention::baseline_C);
  cfg.models = scenario_specs(1, SimMethod::glm, {});
  const auto props = scenario_specs(2, SimMethod::glm, {});
  cfg.models.pi_A = props.pi_A;
  cfg.models.pi_M = props.pi_M;
  cfg.estimators = {EstimatorKind::triply_robust};
  cfg.seed = 3;

  const AnalysisResult plain = run_estimation(ds, cfg);
  BootstrapOptions bo;
  bo.B = 20;
  bo.seed = 4;
  const InferenceReport boot = bootstrap(ds, cfg, bo);
  const double se = boot.rows.at(0).delta.se;

  cfg.K = 5;
  const AnalysisResult crossed = run_estimation(ds, cfg);
  CHECK(crossed.provenance == Provenance::out_of_fold);
  CHECK(se > 0);
  CHECK(std::fabs(crossed.records[0].psi - plain.records[0].psi) < 3 * se);
}
