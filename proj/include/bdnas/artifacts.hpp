#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bdnas/engine.hpp"
#include "bdnas/experiments.hpp"
#include "json.hpp"

namespace bdnas {

/// Provenance stamped into every output file.
struct OutputMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
};

/// "# config_hash=<h>,seed=<s>,version=<v>" is the first line of every CSV.
std::string csv_meta_line(const OutputMeta& meta);

nlohmann::json record_to_json(const RunLogRecord& record);
RunLogRecord record_from_json(const nlohmann::json& j);

/// run_log.jsonl text: a {"meta": {...}} line (with `extra` merged into the
/// meta object) followed by one line per record.
std::string run_log_jsonl(const OutputMeta& meta, const nlohmann::json& extra,
                          const std::vector<RunLogRecord>& records);

struct RunLog {
  nlohmann::json meta;
  std::vector<RunLogRecord> records;
};

/// Throws std::runtime_error naming the line of a malformed record.
RunLog read_run_log(const std::filesystem::path& path);
OutputMeta meta_from_log(const RunLog& log);

/// [block][snapshot][operator] from the Phase-2 records, one snapshot each.
std::vector<std::vector<std::vector<Real>>> alpha_trajectory_from_log(const std::vector<RunLogRecord>& records);

/// CSV text; both are pure functions of the log records.
std::string alpha_trajectory_csv(const std::vector<RunLogRecord>& records, const OutputMeta& meta);
std::string frequency_csv(const std::vector<RunLogRecord>& records, const OutputMeta& meta);

nlohmann::json architecture_json(const ArchitectureResult& result, const OutputMeta& meta);

std::string matthew_frequencies_csv(const MatthewReport& report, const OutputMeta& meta);
std::string matthew_recovery_csv(const MatthewReport& report, const OutputMeta& meta);
std::string multiseed_csv(const MultiseedReport& report, const OutputMeta& meta);
std::string multiseed_summary_csv(const MultiseedReport& report, const OutputMeta& meta);
std::string interference_csv(const InterferenceReport& report, const OutputMeta& meta);
std::string ranks_csv(const InterferenceReport& report, const OutputMeta& meta);
std::string interference_summary_csv(const InterferenceReport& report, const OutputMeta& meta);
std::string beta_sweep_csv(const std::vector<BetaSweepPoint>& points, const OutputMeta& meta);

/// Writes bytes exactly (binary mode, LF preserved).
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace bdnas
