#include "bdnas/artifacts.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "bdnas/text.hpp"

namespace bdnas {

using nlohmann::json;

std::string csv_meta_line(const OutputMeta& meta) {
  return "# config_hash=" + meta.config_hash + ",seed=" + std::to_string(meta.seed) + ",version=" + meta.version + "\n";
}

json record_to_json(const RunLogRecord& r) {
  json active = json::array();
  for (const auto& b : r.active) {
    json row = json::array();
    for (bool v : b) row.push_back(v ? 1 : 0);
    active.push_back(row);
  }
  return {{"t", r.t},
          {"phase", r.phase},
          {"inner_step", r.inner_step},
          {"path", r.path},
          {"ce", r.ce},
          {"latency_term", r.latency_term},
          {"joint", r.joint},
          {"alpha", r.alpha},
          {"active", active},
          {"train_count", r.train_count}};
}

RunLogRecord record_from_json(const json& j) {
  RunLogRecord r;
  r.t = j.at("t").get<int>();
  r.phase = j.at("phase").get<int>();
  r.inner_step = j.at("inner_step").get<int>();
  r.path = j.at("path").get<std::vector<std::size_t>>();
  r.ce = j.at("ce").get<double>();
  r.latency_term = j.at("latency_term").get<double>();
  r.joint = j.at("joint").get<double>();
  r.alpha = j.at("alpha").get<std::vector<std::vector<Real>>>();
  for (const auto& row : j.at("active")) {
    std::vector<bool> b;
    for (const auto& v : row) b.push_back(v.get<int>() != 0);
    r.active.push_back(std::move(b));
  }
  r.train_count = j.at("train_count").get<std::vector<std::vector<std::int64_t>>>();
  return r;
}

std::string run_log_jsonl(const OutputMeta& meta, const json& extra, const std::vector<RunLogRecord>& records) {
  json m = {{"config_hash", meta.config_hash}, {"seed", meta.seed}, {"version", meta.version}};
  if (extra.is_object()) {
    for (const auto& [k, v] : extra.items()) m[k] = v;
  }
  std::string out = json{{"meta", m}}.dump() + "\n";
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  return out;
}

RunLog read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open run log " + path.string());
  RunLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      if (lineno == 1) {
        log.meta = j.at("meta");
      } else {
        log.records.push_back(record_from_json(j));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (log.meta.is_null()) throw std::runtime_error(path.string() + ": missing meta line");
  return log;
}

OutputMeta meta_from_log(const RunLog& log) {
  return {log.meta.at("config_hash").get<std::string>(), log.meta.at("seed").get<std::uint64_t>(),
          log.meta.at("version").get<std::string>()};
}

std::vector<std::vector<std::vector<Real>>> alpha_trajectory_from_log(const std::vector<RunLogRecord>& records) {
  std::vector<std::vector<std::vector<Real>>> out;
  for (const auto& r : records) {
    if (r.phase != 2) continue;
    out.resize(r.alpha.size());
    for (std::size_t l = 0; l < r.alpha.size(); ++l) out[l].push_back(r.alpha[l]);
  }
  return out;
}

std::string alpha_trajectory_csv(const std::vector<RunLogRecord>& records, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "step,t,inner_step,block,operator,alpha,active\n";
  std::size_t step = 0;
  for (const auto& r : records) {
    if (r.phase != 2) continue;
    for (std::size_t l = 0; l < r.alpha.size(); ++l) {
      for (std::size_t m = 0; m < r.alpha[l].size(); ++m) {
        out += std::to_string(step) + "," + std::to_string(r.t) + "," + std::to_string(r.inner_step) + "," +
               std::to_string(l) + "," + std::to_string(m) + "," + format_double(r.alpha[l][m]) + "," +
               (r.active[l][m] ? "1" : "0") + "\n";
      }
    }
    ++step;
  }
  return out;
}

std::string frequency_csv(const std::vector<RunLogRecord>& records, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "round,block,operator,train_count,share,active,n_steps\n";
  // The last Phase-1 record of each round carries the cumulative counts.
  std::map<int, const RunLogRecord*> last;
  for (const auto& r : records) {
    if (r.phase == 1) last[r.t] = &r;
  }
  for (const auto& [t, r] : last) {
    for (std::size_t l = 0; l < r->train_count.size(); ++l) {
      std::int64_t total = 0, active_total = 0;
      for (std::size_t m = 0; m < r->train_count[l].size(); ++m) {
        total += r->train_count[l][m];
        if (r->active[l][m]) active_total += r->train_count[l][m];
      }
      for (std::size_t m = 0; m < r->train_count[l].size(); ++m) {
        const double share = r->active[l][m] && active_total > 0
                                 ? static_cast<double>(r->train_count[l][m]) / static_cast<double>(active_total)
                                 : 0.0;
        out += std::to_string(t) + "," + std::to_string(l) + "," + std::to_string(m) + "," +
               std::to_string(r->train_count[l][m]) + "," + format_double(share) + "," +
               (r->active[l][m] ? "1" : "0") + "," + std::to_string(total) + "\n";
      }
    }
  }
  return out;
}

json architecture_json(const ArchitectureResult& result, const OutputMeta& meta) {
  json blocks = json::array();
  for (std::size_t l = 0; l < result.choice.size(); ++l) {
    const auto& op = result.operators[l];
    blocks.push_back({{"selected", result.choice[l]},
                      {"operator", op.name()},
                      {"kernel", op.kernel},
                      {"expand", op.expand},
                      {"stride", op.stride}});
  }
  return {{"blocks", blocks},
          {"flops", result.flops},
          {"latency_proxy", result.latency_proxy},
          {"alpha", result.alpha},
          {"seed", meta.seed},
          {"config_hash", meta.config_hash},
          {"version", meta.version}};
}

std::string matthew_frequencies_csv(const MatthewReport& report, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "round,strategy,seed,block,operator,train_count,share,active\n";
  for (const auto& s : report.strategies) {
    for (const auto& rep : s.replicas) {
      for (const auto& r : rep.rounds) {
        for (std::size_t m = 0; m < r.share.size(); ++m) {
          out += std::to_string(r.round) + "," + to_string(s.strategy) + "," + std::to_string(rep.seed) + ",0," +
                 std::to_string(m) + "," + std::to_string(r.train_count[m]) + "," + format_double(r.share[m]) + "," +
                 (r.active[m] ? "1" : "0") + "\n";
        }
      }
    }
  }
  return out;
}

std::string matthew_recovery_csv(const MatthewReport& report, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "strategy,planted_best,early_leader,recovered,n_seeds,recovery_rate\n";
  for (const auto& s : report.strategies) {
    out += to_string(s.strategy) + "," + std::to_string(report.best) + "," + std::to_string(report.leader) + "," +
           std::to_string(s.recovered(report.best)) + "," + std::to_string(s.replicas.size()) + "," +
           format_double(s.recovery_rate(report.best)) + "\n";
  }
  return out;
}

namespace {

std::string join_choice(const std::vector<std::size_t>& choice) {
  std::string s;
  for (std::size_t i = 0; i < choice.size(); ++i) s += (i ? "-" : "") + std::to_string(choice[i]);
  return s;
}

std::string summary_row(const std::string& key, const Summary& s) {
  return key + "," + std::to_string(s.n) + "," + format_double(s.mean) + "," + format_double(s.stddev) + "," +
         format_double(s.min) + "," + format_double(s.max) + "\n";
}

}  // namespace

std::string multiseed_csv(const MultiseedReport& report, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "seed,kind,flops,accuracy,choice\n";
  for (const auto& e : report.entries) {
    out += std::to_string(e.seed) + "," + e.kind + "," + format_double(e.flops) + "," + format_double(e.accuracy) +
           "," + join_choice(e.choice) + "\n";
  }
  return out;
}

std::string multiseed_summary_csv(const MultiseedReport& report, const OutputMeta& meta) {
  return csv_meta_line(meta) + "kind,n,mean_accuracy,stddev,min,max\n" + summary_row("searched", report.searched) +
         summary_row("random", report.random);
}

std::string interference_csv(const InterferenceReport& report, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "group,arch,seed,epochs,accuracy\n";
  for (const auto& t : report.trials) {
    out += t.group + "," + t.arch + "," + std::to_string(t.seed) + "," + std::to_string(t.epochs) + "," +
           format_double(t.accuracy) + "\n";
  }
  return out;
}

std::string ranks_csv(const InterferenceReport& report, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "pairing,seed,tau,rho,n_archs,n_seeds\n";
  for (const auto& r : report.ranks) {
    out += r.pairing + "," + std::to_string(r.seed) + "," + format_double(r.tau) + "," + format_double(r.rho) +
           ",4,1\n";
  }
  for (const char* p : {"NS-B2", "NS-B4", "NSmean-B2", "NSmean-B4"}) {
    const auto tau = report.tau(p), rho = report.rho(p);
    out += std::string(p) + ",mean," + format_double(tau.mean) + "," + format_double(rho.mean) + ",4," +
           std::to_string(tau.n) + "\n";
  }
  return out;
}

std::string interference_summary_csv(const InterferenceReport& report, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "group,n,mean_accuracy,stddev,min,max\n";
  for (const char* g : {"NS", "B2", "B4"}) out += summary_row(g, report.accuracy(g));
  return out;
}

std::string beta_sweep_csv(const std::vector<BetaSweepPoint>& points, const OutputMeta& meta) {
  std::string out = csv_meta_line(meta) + "beta,n_seeds,mean_cost,stddev,min,max\n";
  for (const auto& p : points) out += summary_row(format_double(p.beta), p.summary);
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace bdnas
