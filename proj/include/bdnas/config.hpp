#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bdnas/data.hpp"
#include "bdnas/engine.hpp"
#include "bdnas/experiments.hpp"
#include "json.hpp"

namespace bdnas {

struct DataConfig {
  DataSource source = DataSource::Synthetic;
  SyntheticOptions synthetic;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> files;  // cifar10-binary only
  CifarOptions cifar;
  SplitFractions splits;
};

struct MatthewStudyConfig {
  MatthewScenario scenario = late_bloomer_scenario();
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7};
};

struct MultiseedStudyConfig {
  int n_seeds = 8;
  double flops_window = 0.10;
  StandaloneOptions train;
};

struct InterferenceStudyConfig {
  SuperNetSpec space;
  int ns_epochs = 3;
  std::size_t batch_size = 16;
  double lr = 0.01;
  double momentum = 0.9;
  std::vector<int> b4_kernels = {1, 3, 5, 7};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
};

/// Everything a command needs; every field appears in the effective config.
struct RunConfig {
  SuperNetSpec space;
  SearchConfig search;
  DataConfig data;
  std::optional<std::filesystem::path> latency_table;
  std::filesystem::path output_dir = "out";
  MatthewStudyConfig matthew;
  MultiseedStudyConfig multiseed;
  InterferenceStudyConfig interference;
};

/// Built-in desk-scale defaults (8×8 synthetic images, four blocks).
RunConfig default_run_config();

/// Parses a config document over the defaults. Unknown keys, wrong types and
/// invalid values raise ConfigError. Relative paths resolve against
/// `base_dir`.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

SuperNetSpec parse_space(const nlohmann::json& doc);
nlohmann::json space_to_json(const SuperNetSpec& spec);

/// Cross-field checks (space geometry, th_p against the largest block, split
/// fractions, a non-empty alpha-train split).
void validate_run_config(const RunConfig& config);

/// Canonical JSON of every field, defaults included.
nlohmann::json effective_config(const RunConfig& config);
/// 16 hex digits of FNV-1a over the compact canonical JSON.
std::string config_hash(const RunConfig& config);

}  // namespace bdnas
