#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "bdnas/config.hpp"

namespace bdnas {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Command-line values that override the config file.
struct CliOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> strategy;
  std::optional<double> beta;
  std::optional<double> th_p;
  int parallel_seeds = 1;
};

/// Loads the config (or the built-in defaults), applies overrides and
/// validates. Throws ConfigError.
RunConfig resolve_config(const CliOptions& cli);

/// Synthetic generation or CIFAR-10 binary loading, then split assignment.
DatasetHandle load_dataset(const DataConfig& config);

/// Worker cap: BDNAS_THREADS when set, otherwise the hardware concurrency.
int thread_cap();

/// Study options exactly as `study multiseed` / `study interference` use them.
MultiseedOptions multiseed_options(const RunConfig& config, int threads);
InterferenceOptions interference_options(const RunConfig& config, int threads);

int cmd_search(const CliOptions& cli, std::ostream& out, std::ostream& err);
int cmd_study(const std::string& study, const CliOptions& cli, std::ostream& out, std::ostream& err);
/// Regenerates alpha_trajectory.csv and frequency.csv from run_log.jsonl in
/// `run_dir`, writing into `out_dir` (defaults to `run_dir`).
int cmd_export_plots(const std::filesystem::path& run_dir, const std::optional<std::filesystem::path>& out_dir,
                     std::ostream& out, std::ostream& err);
int cmd_gradcheck(std::uint64_t seed, std::ostream& out, std::ostream& err);
/// Times every operator of the configured space and writes a latency CSV.
int cmd_measure_latency(const CliOptions& cli, const std::filesystem::path& csv, std::ostream& out,
                        std::ostream& err);

}  // namespace bdnas
