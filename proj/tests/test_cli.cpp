#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdecomp/cli.hpp"

using namespace sdecomp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sdecomp_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sdecomp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string write_json(const TempDir& dir, const std::string& name, const json& j) {
  const std::string p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json model(const char* family, std::vector<std::string> formula) { return {{"family", family}, {"formula", formula}}; }

json analyze_config(const std::string& data) {
  return {
      {"data", data},
      {"roles",
       {{"group", {{"column", "R"}, {"reference", "0"}, {"comparisons", {"1"}}}},
        {"baseline", {"C"}},
        {"pre_confounders", {"X1", "X2", "X3"}},
        {"system_factor", "A"},
        {"intermediate_confounders", {"Z"}},
        {"individual_factor", "M"},
        {"outcome", "Y"},
        {"allowable_A", {"C"}},
        {"allowable_M", {"C"}}}},
      {"models",
       {{"pi_A", model("logistic_glm", {"1", "R", "C", "X1", "X2", "X3", "R:X3"})},
        {"pi_M", model("logistic_glm", {"1", "R", "A", "C", "X1", "X2", "X3", "Z", "R:X2"})},
        {"mu", model("linear_glm", {"1", "R", "M", "A", "C", "X1", "X2", "X3", "Z", "R:M", "R:M:A"})},
        {"nu", model("linear_glm", {"1", "R", "A", "C", "X1", "X2", "X3", "R:A", "R:C", "A:C", "R:A:C"})}}},
      {"K", 2},
      {"seed", 4},
      {"bootstrap", {{"B", 8}, {"seed", 5}}},
  };
}

std::string generate(const TempDir& dir, int n, int seed) {
  const std::string csv = dir / "data.csv";
  const auto cfg = write_json(dir, "gen.json", {{"n", n}, {"seed", seed}, {"out", csv}});
  REQUIRE(cli({"generate", "--config", cfg}) == kExitOk);
  return csv;
}

}  // namespace

TEST_CASE("command line errors exit with the configuration code") {
  CHECK(cli({}) == kExitConfig);
  CHECK(cli({"frobnicate"}) == kExitConfig);
  CHECK(cli({"simulate"}) == kExitConfig);
  CHECK(cli({"simulate", "--config", "x.json", "--jobs", "0"}) == kExitConfig);
  CHECK(cli({"--help"}) == kExitOk);
}

TEST_CASE("configuration files are parsed strictly") {
  TempDir dir;
  CHECK(cli({"simulate", "--config", dir / "absent.json"}) == kExitConfig);
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(cli({"oracle", "--config", dir / "broken.json"}) == kExitConfig);

  CHECK(cli({"simulate", "--config", write_json(dir, "u.json", {{"replicate", 3}})}) == kExitConfig);
  CHECK(cli({"simulate", "--config", write_json(dir, "t.json", {{"replicates", "3"}})}) == kExitConfig);
  CHECK(cli({"simulate", "--config", write_json(dir, "s.json", {{"scenarios", {7}}})}) == kExitConfig);
  CHECK(cli({"oracle", "--config", write_json(dir, "o.json", {{"N", 1}})}) == kExitConfig);
  CHECK(cli({"generate", "--config", write_json(dir, "g.json", {{"seed", 1}})}) == kExitConfig);

  CHECK_THROWS_WITH_AS(parse_simulate_config({{"gbt", {{"n_tree", 5}}}}), doctest::Contains("gbt.n_tree"),
                       ConfigError);

  json a = analyze_config("d.csv");
  a["roles"]["colour"] = "x";
  CHECK_THROWS_WITH_AS(parse_analyze_config(a), doctest::Contains("roles.colour"), ConfigError);

  a = analyze_config("d.csv");
  a["bootstrap"]["clustered"] = true;
  CHECK(cli({"analyze", "--config", write_json(dir, "c.json", a)}) == kExitConfig);

  a = analyze_config("d.csv");
  a["models"]["mu"]["gbt"] = {{"n_trees", 3}};
  CHECK_THROWS_AS(parse_analyze_config(a), ConfigError);

  const AnalyzeConfig ok = parse_analyze_config(analyze_config("d.csv"));
  CHECK(ok.analysis.K == 2);
  CHECK(ok.bootstrap->B == 8);
  CHECK(ok.analysis.estimators.size() == 4);
}

TEST_CASE("data problems exit with the data code") {
  TempDir dir;
  CHECK(cli({"analyze", "--config", write_json(dir, "a.json", analyze_config(dir / "missing.csv"))}) == kExitData);

  std::ofstream(dir / "holes.csv") << "R,C,X1,X2,X3,A,Z,M,Y\n0,1,0,0,0,1,0.5,1,2\n1,0,0,0,0,,0.5,1,2\n";
  CHECK(cli({"analyze", "--config", write_json(dir, "b.json", analyze_config(dir / "holes.csv"))}) == kExitData);
}

TEST_CASE("generated data round trip through CSV") {
  TempDir dir;
  const std::string csv = generate(dir, 500, 9);
  const Dataset direct = generate_dgp(500, 9);
  const LoadResult back = load_csv(csv, parse_analyze_config(analyze_config(csv)).analysis.roles, MissingPolicy::reject);
  REQUIRE(back.data.rows() == 500);
  for (const auto& name : direct.names()) {
    CAPTURE(name);
    CHECK(back.data.values(name) == direct.values(name));
  }
}

TEST_CASE("analyze output is byte-identical across runs and worker counts") {
  TempDir dir;
  const std::string csv = generate(dir, 800, 2);
  const auto cfg = write_json(dir, "a.json", analyze_config(csv));
  REQUIRE(cli({"analyze", "--config", cfg, "--out", dir / "one"}) == kExitOk);
  REQUIRE(cli({"analyze", "--config", cfg, "--out", dir / "two"}) == kExitOk);
  REQUIRE(cli({"analyze", "--config", cfg, "--out", dir / "many", "--jobs", "3"}) == kExitOk);
  for (const char* f : {"report.json", "report.csv"}) {
    CAPTURE(f);
    const std::string one = slurp(dir / (std::string("one/") + f));
    CHECK(one == slurp(dir / (std::string("two/") + f)));
    CHECK(one == slurp(dir / (std::string("many/") + f)));
  }
  const json report = json::parse(slurp(dir / "one/report.json"));
  CHECK(report["inference"]["replicates_used"] == 8);
}

TEST_CASE("simulate output is byte-identical across runs and worker counts") {
  TempDir dir;
  const json sim{{"scenarios", {1, 4}}, {"n", {300}}, {"replicates", 3}, {"truth", 0.3475}, {"seed", 11}};
  const auto cfg = write_json(dir, "s.json", sim);
  REQUIRE(cli({"simulate", "--config", cfg, "--out", dir / "one"}) == kExitOk);
  REQUIRE(cli({"simulate", "--config", cfg, "--out", dir / "two", "--jobs", "2"}) == kExitOk);
  for (const char* f : {"estimates.csv", "metrics.csv", "metadata.json"}) {
    CAPTURE(f);
    CHECK(slurp(dir / (std::string("one/") + f)) == slurp(dir / (std::string("two/") + f)));
  }
  CHECK(slurp(dir / "one/metrics.csv").find(",0.34749999999999998") != std::string::npos);
}

TEST_CASE("oracle writes its results") {
  TempDir dir;
  const auto cfg = write_json(dir, "o.json", {{"N", 20000}, {"seed", 3}, {"convention", "baseline_C"}});
  REQUIRE(cli({"oracle", "--config", cfg, "--out", dir / "o"}) == kExitOk);
  const json j = json::parse(slurp(dir / "o/oracle.json"));
  CHECK(j["N"] == 20000);
  CHECK(j["results"].contains("baseline_C"));
  CHECK_FALSE(j["results"].contains("none"));
}

TEST_CASE("estimation failures exit with the estimation code and leave diagnostics") {
  TempDir dir;
  const Dataset ds = generate_dgp(300, 6);
  std::vector<Index> reference;
  for (Index i = 0; i < ds.rows(); ++i)
    if (ds.values("R")[i] == 0) reference.push_back(i);
  std::ofstream out(dir / "ref_only.csv");
  write_csv(ds.subset(reference), out);
  out.close();
  json a = analyze_config(dir / "ref_only.csv");
  a.erase("bootstrap");
  CHECK(cli({"analyze", "--config", write_json(dir, "a.json", a), "--out", dir / "r"}) == kExitEstimation);
  const json diag = json::parse(slurp(dir / "r/diagnostics.json"));
  CHECK(diag["error"].get<std::string>().find("empty") != std::string::npos);
}

TEST_CASE("end to end on generated data lands on the oracle truth") {
  TempDir dir;
  const std::string csv = generate(dir, 4000, 21);
  json a = analyze_config(csv);
  // scenario-1 models: misspecified propensities, correct outcome models
  a["models"]["pi_A"] = model("logistic_glm", {"1", "R", "C", "xm1(X1)", "xm2(X1,X2)", "xm3(X1,X3)"});
  a["models"]["pi_M"] = model("logistic_glm", {"1", "R", "A", "C", "xm1(X1)", "xm2(X1,X2)", "xm3(X1,X3)", "Z"});
  a["K"] = 0;
  a["estimators"] = {"triply_robust"};
  a["bootstrap"] = {{"B", 60}, {"seed", 3}};
  REQUIRE(cli({"analyze", "--config", write_json(dir, "a.json", a), "--out", dir / "r"}) == kExitOk);
  const json rep = json::parse(slurp(dir / "r/report.json"));
  const auto& row = rep["inference"]["rows"][0];
  const double delta = row["delta"]["estimate"].get<double>();
  const double se = row["delta"]["se"].get<double>();
  CAPTURE(delta);
  CAPTURE(se);
  CHECK(se > 0);
  CHECK(std::fabs(delta - 0.358) < 3 * se);
}

TEST_CASE("simulate writes one row per replicate and one per cell") {
  TempDir dir;
  const json sim{{"scenarios", {2}}, {"n", {200}}, {"replicates", 2}, {"truth", 0.35}, {"estimators", {"imputation"}}};
  REQUIRE(cli({"simulate", "--config", write_json(dir, "s.json", sim), "--out", dir / "o"}) == kExitOk);
  auto lines = [](const std::string& text) { return std::count(text.begin(), text.end(), '\n'); };
  CHECK(lines(slurp(dir / "o/estimates.csv")) == 3);
  CHECK(lines(slurp(dir / "o/metrics.csv")) == 2);
  const json meta = json::parse(slurp(dir / "o/metadata.json"));
  CHECK(meta.dump().find("baseline_C") != std::string::npos);
}
