#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snod/analysis.hpp"
#include "snod/dynamics.hpp"
#include "snod/robot_nav.hpp"
#include "snod/simulate.hpp"

namespace snod {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

struct NamedParams {
  std::string name;
  ModelParams params;
};

struct AnalyzeConfig {
  std::vector<NamedParams> parameter_sets;
  double b = 0.0;
  std::pair<double, double> u0_range{0.0, 1.0};
  double step = 0.01;
  ContinuationOptions continuation;
};

struct PhasePlaneOptions {
  std::pair<double, double> z_range{-1.2, 1.2};
  int points = 400;
};

struct SimulateConfig {
  SystemKind system = SystemKind::SNOD;
  ModelParams params;
  InputSignal input;
  AgentState initial{0.01, 0.01};
  IntegrationConfig integration;
  double spike_threshold = 0.5;
  PhasePlaneOptions phase_plane;
};

struct NetworkRunConfig {
  ModelParams params;
  NetworkConfig network;
  std::vector<AgentState> initial;
  IntegrationConfig integration;
  double spike_threshold = 0.5;
  std::optional<std::pair<double, double>> sync_window;
};

struct ScenarioRunConfig {
  ScenarioConfig scenario;
  bool nod_baseline = false;  // also run the same world with kus = 0
};

/// Reads and parses a JSON file. Missing/unreadable file -> IoError,
/// malformed JSON -> ConfigError with the parser's line and column.
Json load_json(const std::filesystem::path& path);

/// Strict parsers: every key is checked, unknown keys raise ConfigError
/// naming the full key path.
AnalyzeConfig parse_analyze(const Json& j);
SimulateConfig parse_simulate(const Json& j);
NetworkRunConfig parse_network(const Json& j);
ScenarioRunConfig parse_scenario(const Json& j);

Json to_json(const ModelParams& p);

/// {"command", "config", "seed", "version"}; embedded in every output JSON.
Json manifest(const std::string& command, const Json& config, std::optional<std::uint64_t> seed);

}  // namespace snod
