#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "sdecomp/inference.hpp"
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

AnalysisConfig toy_config() {
  AnalysisConfig cfg;
  cfg.roles = toy::roles();
  cfg.models = toy_specs();
  cfg.estimators = {EstimatorKind::imputation, EstimatorKind::weighting, EstimatorKind::imp_then_weight,
                    EstimatorKind::triply_robust};
  return cfg;
}

Dataset with_clusters(const Dataset& ds, int size) {
  Column c;
  c.name = "G";
  c.type = ColumnType::continuous;
  c.values.resize(ds.rows());
  for (Index i = 0; i < ds.rows(); ++i) c.values[i] = static_cast<double>(i / size);
  Dataset out = ds;
  out.add_column(std::move(c));
  return out;
}

}  // namespace

TEST_CASE("summary of a bootstrap distribution") {
  const double d = 0.018 / std::sqrt(2.0);
  const auto s = summarize({-0.087 - d, -0.087 + d}, -0.087);
  CHECK(s.se == doctest::Approx(0.018).epsilon(1e-12));
  REQUIRE(s.t);
  CHECK(*s.t == doctest::Approx(-4.8333333).epsilon(1e-6));
  REQUIRE(s.p);
  CHECK(*s.p < 1e-4);
  CHECK(*s.p == doctest::Approx(std::erfc(4.8333333333 / std::sqrt(2.0))).epsilon(1e-6));

  const auto zero = summarize({-1, 1}, 0.0);
  CHECK(*zero.t == 0);
  CHECK(*zero.p == 1);

  std::vector<double> grid;
  for (int i = 100; i >= 1; --i) grid.push_back(i / 100.0);
  const auto ci = summarize(grid, 0.5);
  CHECK(ci.ci_lo == doctest::Approx(0.03));
  CHECK(ci.ci_hi == doctest::Approx(0.98));
  const auto ci90 = summarize(grid, 0.5, 0.90);
  CHECK(ci90.ci_lo == doctest::Approx(0.05));
  CHECK(ci90.ci_hi == doctest::Approx(0.95));

  const auto flat = summarize({2, 2, 2}, 1.0);
  CHECK(flat.zero_se);
  CHECK_FALSE(flat.t);
  CHECK_FALSE(flat.p);
  CHECK_THROWS_AS(summarize({}, 0.0), EstimationError);
}

TEST_CASE("bootstrap option validation") {
  BootstrapOptions o;
  o.B = 1;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o.B = 10;
  o.level = 1;
  CHECK_THROWS_AS(o.validate(), ConfigError);

  const Dataset ds = toy::Population{}.sample(300, 1);
  BootstrapOptions c;
  c.B = 2;
  c.clustered = true;
  CHECK_THROWS_AS(bootstrap(ds, toy_config(), c), ConfigError);
}

TEST_CASE("row resampling draws n rows") {
  const Dataset ds = toy::Population{}.sample(500, 2);
  const auto rows = resample_rows(ds, toy::roles(), false, 7);
  CHECK(rows.size() == 500);
  CHECK(rows == resample_rows(ds, toy::roles(), false, 7));
  CHECK(rows != resample_rows(ds, toy::roles(), false, 8));
  std::set<Index> distinct(rows.begin(), rows.end());
  // about 1 - 1/e of the rows appear
  CHECK(distinct.size() > 270);
  CHECK(distinct.size() < 360);
}

TEST_CASE("cluster resampling keeps whole clusters") {
  const Dataset ds = with_clusters(toy::Population{}.sample(600, 3), 6);
  RoleMap roles = toy::roles();
  roles.cluster = "G";
  const auto& g = ds.values("G");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto rows = resample_rows(ds, roles, true, seed);
    REQUIRE(rows.size() == 600);
    // each block of six is one full cluster in row order
    for (std::size_t b = 0; b < rows.size(); b += 6) {
      const double id = g[rows[b]];
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(g[rows[b + j]] == id);
        CHECK(rows[b + j] == rows[b] + static_cast<Index>(j));
      }
    }
  }
}

TEST_CASE("constant outcome gives zero bootstrap spread") {
  Dataset ds = toy::Population{}.sample(800, 4);
  ds = ds.with_values("Y", Eigen::VectorXd::Constant(ds.rows(), 2.5));
  AnalysisConfig cfg = toy_config();
  cfg.estimators = {EstimatorKind::imputation, EstimatorKind::triply_robust};
  // additive models keep the normal equations nonsingular in every resample
  cfg.models.mu = ModelSpec::glm(ModelFamily::linear_glm, FeatureFormula::parse({"1", "R", "X", "A", "Z", "M", "C"}));
  cfg.models.nu = ModelSpec::glm(ModelFamily::linear_glm, FeatureFormula::parse({"1", "R", "X", "A", "C"}));
  BootstrapOptions o;
  o.B = 20;
  o.seed = 5;
  const auto rep = bootstrap(ds, cfg, o);
  for (const auto& row : rep.rows) {
    CHECK(rep.used == 20);
    CHECK(row.delta.se < 1e-12);
    CHECK(std::fabs(row.delta.estimate) < 1e-12);
  }
}

TEST_CASE("replicates are additive and independent of the worker count") {
  const Dataset ds = toy::Population{}.sample(1000, 5);
  AnalysisConfig cfg = toy_config();
  cfg.K = 2;
  BootstrapOptions o;
  o.B = 12;
  o.seed = 77;
  const auto a = bootstrap(ds, cfg, o);
  o.jobs = 3;
  const auto b = bootstrap(ds, cfg, o);
  CHECK(a.used == 12);
  CHECK(a.max_additivity_error < 1e-10);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t j = 0; j < a.rows.size(); ++j) {
    CHECK(a.rows[j].delta_samples == b.rows[j].delta_samples);
    CHECK(a.rows[j].tau_samples == b.rows[j].tau_samples);
    CHECK(a.rows[j].delta.se == b.rows[j].delta.se);
    for (std::size_t i = 0; i < a.rows[j].tau_samples.size(); ++i)
      CHECK(std::fabs(a.rows[j].tau_samples[i] - a.rows[j].delta_samples[i] - a.rows[j].zeta_samples[i]) < 1e-10);
    CHECK(a.rows[j].delta.estimate == a.point.records[j].delta);
  }

  o.seed = 78;
  const auto c = bootstrap(ds, cfg, o);
  CHECK(c.rows[0].delta_samples != a.rows[0].delta_samples);
}

TEST_CASE("degenerate replicates are retried once, then dropped") {
  // one reference row with A = 1: most resamples lose it
  Dataset ds = toy::Population{}.sample(400, 6);
  Eigen::VectorXd a = ds.values("A");
  const auto& r = ds.values("R");
  bool kept = false;
  for (Index i = 0; i < ds.rows(); ++i)
    if (r[i] == 0 && a[i] == 1) {
      if (kept) a[i] = 0;
      kept = true;
    }
  ds = ds.with_values("A", a);
  AnalysisConfig cfg = toy_config();
  cfg.estimators = {EstimatorKind::imputation};
  cfg.models.pi_A = ModelSpec::glm(ModelFamily::logistic_glm, FeatureFormula::parse({"1", "R", "X", "C"}));
  BootstrapOptions o;
  o.B = 30;
  o.seed = 9;
  InferenceReport rep;
  try {
    rep = bootstrap(ds, cfg, o);
  } catch (const EstimationError&) {
    FAIL("every replicate failed");
  }
  CHECK(rep.used + rep.dropped == rep.B);
  CHECK(rep.dropped > 0);
  CHECK(rep.retried >= rep.dropped);
  CHECK(rep.failures.size() == static_cast<std::size_t>(rep.dropped));
  CHECK(rep.rows[0].delta_samples.size() == static_cast<std::size_t>(rep.used));
}

TEST_CASE("percentile intervals cover the toy truth" * doctest::skip(std::getenv("SDECOMP_LONG") == nullptr)) {
  const toy::Population pop;
  const double truth = pop.mean_y(1) - pop.psi_joint(1);
  AnalysisConfig cfg = toy_config();
  cfg.estimators = {EstimatorKind::triply_robust};
  const int reps = 100;
  int covered = 0;
  for (int k = 0; k < reps; ++k) {
    const Dataset ds = pop.sample(2000, 1000 + static_cast<std::uint64_t>(k));
    BootstrapOptions o;
    o.B = 200;
    o.seed = static_cast<std::uint64_t>(k);
    const auto rep = bootstrap(ds, cfg, o);
    const auto& d = rep.rows[0].delta;
    covered += d.ci_lo <= truth && truth <= d.ci_hi;
  }
  MESSAGE("coverage " << covered << "/" << reps);
  // binomial(100, 0.95) falls below 88 with probability under 0.2%
  CHECK(covered >= 88);
}
