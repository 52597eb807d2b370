#pragma once

#include <json.hpp>

#include <optional>
#include <string>

#include "sdecomp/inference.hpp"
#include "sdecomp/pipeline.hpp"
#include "sdecomp/simulation.hpp"

namespace sdecomp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitEstimation = 4;

struct AnalyzeConfig {
  std::string data;
  MissingPolicy missing = MissingPolicy::reject;
  AnalysisConfig analysis;
  std::optional<BootstrapOptions> bootstrap;
};

struct OracleConfig {
  Index N = 1000000;
  std::uint64_t seed = 1;
  std::optional<Convention> convention;  // absent: both
  bool null_intervention = false;
};

struct GenerateConfig {
  Index n = 1000;
  std::uint64_t seed = 1;
  std::string out = "data.csv";
};

/// Strict parsers: unknown keys, wrong types and missing fields raise ConfigError naming the path.
AnalyzeConfig parse_analyze_config(const nlohmann::json& j);
SimulationConfig parse_simulate_config(const nlohmann::json& j);
OracleConfig parse_oracle_config(const nlohmann::json& j);
GenerateConfig parse_generate_config(const nlohmann::json& j);

/// Entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace sdecomp
