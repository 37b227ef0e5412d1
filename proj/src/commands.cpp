#include "bdnas/commands.hpp"

#include <cstdlib>
#include <sstream>
#include <ostream>
#include <thread>

#include "bdnas/artifacts.hpp"
#include "bdnas/checkpoint.hpp"
#include "bdnas/gradcheck_suite.hpp"
#include "bdnas/parallel.hpp"
#include "bdnas/version.hpp"

namespace bdnas {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig resolve_config(const CliOptions& cli) {
  RunConfig c = cli.config ? load_run_config(*cli.config) : default_run_config();
  if (cli.seed) c.search.seed = *cli.seed;
  if (cli.out) c.output_dir = *cli.out;
  if (cli.strategy) c.search.strategy = strategy_from_string(*cli.strategy);
  if (cli.beta) c.search.beta = *cli.beta;
  if (cli.th_p) c.search.th_p = *cli.th_p;
  if (c.search.beta < 0) throw ConfigError("beta must be >= 0");
  if (cli.parallel_seeds < 1) throw ConfigError("--parallel-seeds must be >= 1");
  validate_run_config(c);
  return c;
}

DatasetHandle load_dataset(const DataConfig& config) {
  DatasetHandle data = config.source == DataSource::Synthetic ? gen_synthetic(config.seed, config.synthetic)
                                                              : load_cifar10_binary(config.files, config.cifar);
  if (data.size() == 0) throw ConfigError("dataset is empty");
  try {
    data.assign_splits(config.splits, config.seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data.splits: ") + e.what());
  }
  if (data.weight_train.empty() || data.alpha_train.empty()) {
    throw ConfigError("weight-train and alpha-train splits must both be non-empty");
  }
  return data;
}

int thread_cap() {
  int cap = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("BDNAS_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return cap;
}

namespace {

OutputMeta meta_for(const RunConfig& c) { return {config_hash(c), c.search.seed, kVersion}; }

void write_effective_config(const RunConfig& c) {
  fs::create_directories(c.output_dir);
  json doc = effective_config(c);
  doc["config_hash"] = config_hash(c);
  doc["version"] = kVersion;
  write_text_file(c.output_dir / "effective_config.json", doc.dump(2) + "\n");
}

json data_meta(const DatasetHandle& data) {
  return {{"data_source", to_string(data.source)},
          {"examples", data.size()},
          {"split_sizes", {data.weight_train.size(), data.alpha_train.size(), data.eval.size()}},
          {"channel_mean", data.channel_mean},
          {"channel_std", data.channel_std}};
}

// Error-to-exit-code mapping shared by every command.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataFormatError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

void search_one(const RunConfig& c, const DatasetHandle& data, const LatencyTable* latency, std::ostream& out) {
  write_effective_config(c);
  const OutputMeta meta = meta_for(c);
  auto run = run_neural_search(c.search, c.space, data, latency);
  if (auto problem = check_drop_semantics(run.outcome.log); !problem.empty()) {
    throw std::logic_error("drop contract violated: " + problem);
  }
  const auto& log = run.outcome.log;
  write_text_file(c.output_dir / "run_log.jsonl", run_log_jsonl(meta, data_meta(data), log));
  write_text_file(c.output_dir / "architecture.json", architecture_json(run.outcome.result, meta).dump(2) + "\n");
  write_text_file(c.output_dir / "alpha_trajectory.csv", alpha_trajectory_csv(log, meta));
  write_text_file(c.output_dir / "frequency.csv", frequency_csv(log, meta));
  out << "seed " << c.search.seed << ": selected";
  for (const auto& op : run.outcome.result.operators) out << " " << op.name();
  out << ", flops " << run.outcome.result.flops << ", output " << c.output_dir.string() << "\n";
}

}  // namespace

MultiseedOptions multiseed_options(const RunConfig& c, int threads) {
  MultiseedOptions o;
  o.search = c.search;
  o.train = c.multiseed.train;
  o.n_seeds = c.multiseed.n_seeds;
  o.flops_window = c.multiseed.flops_window;
  o.threads = threads;
  return o;
}

InterferenceOptions interference_options(const RunConfig& c, int threads) {
  InterferenceOptions o;
  const auto& ic = c.interference;
  const auto& is = ic.space;
  if (is.in_channels != c.space.in_channels || is.height != c.space.height || is.width != c.space.width ||
      is.num_classes != c.space.num_classes) {
    throw ConfigError("study.interference.space input and classes must match space");
  }
  o.space = ic.space;
  o.ns_epochs = ic.ns_epochs;
  o.batch_size = ic.batch_size;
  o.lr = ic.lr;
  o.momentum = ic.momentum;
  o.b4_kernels = ic.b4_kernels;
  o.seeds = ic.seeds;
  o.threads = threads;
  return o;
}

int cmd_search(const CliOptions& cli, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig base = resolve_config(cli);
    std::optional<LatencyTable> latency;
    if (base.latency_table) latency = LatencyTable::load_csv(*base.latency_table);
    const DatasetHandle data = load_dataset(base.data);
    if (base.search.cost_kind == CostKind::LatencyProxy && !latency) {
      throw ConfigError("cost_kind latency_proxy needs latency_table");
    }
    if (latency) {
      // Surface missing entries before any output exists.
      RandomStream probe(0, "probe");
      build_latency_table(base.space, build_search_space(base.space, probe), &*latency, false);
    }
    const std::size_t n = static_cast<std::size_t>(cli.parallel_seeds);
    if (n == 1) {
      search_one(base, data, latency ? &*latency : nullptr, out);
      return kExitOk;
    }
    std::vector<RunConfig> replicas(n, base);
    for (std::size_t i = 0; i < n; ++i) {
      replicas[i].search.seed = base.search.seed + i;
      replicas[i].output_dir = base.output_dir / ("seed_" + std::to_string(replicas[i].search.seed));
    }
    std::vector<std::string> reports(n);
    parallel_for(n, std::min(cli.parallel_seeds, thread_cap()), [&](std::size_t i) {
      std::ostringstream local;
      search_one(replicas[i], data, latency ? &*latency : nullptr, local);
      reports[i] = local.str();
    });
    for (const auto& r : reports) out << r;
    return kExitOk;
  });
}

int cmd_study(const std::string& study, const CliOptions& cli, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (study != "matthew" && study != "multiseed" && study != "interference") {
      throw ConfigError("unknown study '" + study + "' (expected matthew, multiseed or interference)");
    }
    const RunConfig c = resolve_config(cli);
    const int threads = thread_cap();
    const OutputMeta meta = meta_for(c);
    const fs::path dir = c.output_dir;

    if (study == "matthew") {
      write_effective_config(c);
      const auto report = run_matthew_study(c.matthew.scenario, c.matthew.seeds,
                                            {Strategy::BalancedDrop, Strategy::ProxylessLike}, threads);
      write_text_file(dir / "matthew_frequencies.csv", matthew_frequencies_csv(report, meta));
      write_text_file(dir / "matthew_recovery.csv", matthew_recovery_csv(report, meta));
      for (const auto& s : report.strategies) {
        out << to_string(s.strategy) << ": recovered " << s.recovered(report.best) << " of " << s.replicas.size()
            << "\n";
      }
      return kExitOk;
    }

    const DatasetHandle data = load_dataset(c.data);
    if (study == "multiseed") {
      const MultiseedOptions o = multiseed_options(c, threads);
      write_effective_config(c);
      const auto report = run_multiseed(c.space, data, o);
      write_text_file(dir / "multiseed.csv", multiseed_csv(report, meta));
      write_text_file(dir / "multiseed_summary.csv", multiseed_summary_csv(report, meta));
      out << "searched mean accuracy " << report.searched.mean << " (n=" << report.searched.n << "), random "
          << report.random.mean << " (n=" << report.random.n << ")\n";
      return kExitOk;
    }

    const InterferenceOptions o = interference_options(c, threads);
    write_effective_config(c);
    const auto report = run_interference_study(o, data);
    write_text_file(dir / "interference.csv", interference_csv(report, meta));
    write_text_file(dir / "ranks.csv", ranks_csv(report, meta));
    write_text_file(dir / "interference_summary.csv", interference_summary_csv(report, meta));
    for (const char* g : {"NS", "B2", "B4"}) {
      out << g << " mean accuracy " << report.accuracy(g).mean << " (n=" << report.accuracy(g).n << ")\n";
    }
    return kExitOk;
  });
}

int cmd_export_plots(const fs::path& run_dir, const std::optional<fs::path>& out_dir, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    const auto log = read_run_log(run_dir / "run_log.jsonl");
    const auto meta = meta_from_log(log);
    const fs::path dir = out_dir.value_or(run_dir);
    fs::create_directories(dir);
    write_text_file(dir / "alpha_trajectory.csv", alpha_trajectory_csv(log.records, meta));
    write_text_file(dir / "frequency.csv", frequency_csv(log.records, meta));
    out << "exported " << log.records.size() << " records to " << dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    constexpr Real kTolerance = 1e-6;
    GradSuiteOptions o;
    o.seed = seed;
    bool ok = true;
    for (const auto& r : run_gradcheck_suite(o)) {
      const bool pass = r.passed(kTolerance);
      ok = ok && pass;
      out << (pass ? "PASS " : "FAIL ") << r.op << " instances=" << r.instances << " max_rel_error=" << r.max_rel_error
          << (r.worst.empty() ? "" : " at " + r.worst) << "\n";
    }
    return ok ? kExitOk : kExitFailure;
  });
}

int cmd_measure_latency(const CliOptions& cli, const fs::path& csv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = resolve_config(cli);
    RandomStream init(c.search.seed, "latency/space");
    const auto blocks = build_search_space(c.space, init);
    const auto table = measure_latency_table(c.space, blocks);
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    table.save_csv(csv);
    out << "wrote " << table.size() << " entries to " << csv.string() << "\n";
    return kExitOk;
  });
}

}  // namespace bdnas
