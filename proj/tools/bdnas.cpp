#include <iostream>

#include "CLI11.hpp"
#include "bdnas/commands.hpp"
#include "bdnas/version.hpp"

namespace {

void add_run_flags(CLI::App* cmd, bdnas::CliOptions& o, std::string& config, std::string& out) {
  cmd->add_option("--config", config, "JSON run config");
  cmd->add_option("--out", out, "output directory");
  cmd->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& v) { o.seed = v; }, "base seed");
  cmd->add_option_function<std::string>("--strategy", [&o](const std::string& v) { o.strategy = v; },
                                        "balanced_drop, proxyless_like or oneshot_uniform");
  cmd->add_option_function<double>("--beta", [&o](const double& v) { o.beta = v; }, "latency weight");
  cmd->add_option_function<double>("--th-p", [&o](const double& v) { o.th_p = v; }, "drop threshold on p");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weight-sharing architecture search with balanced training and selective drop"};
  app.set_version_flag("--version", std::string(bdnas::kVersion));
  app.require_subcommand(1);

  bdnas::CliOptions opts;
  std::string config, out;

  auto* search = app.add_subcommand("search", "run one search (or several seeds)");
  add_run_flags(search, opts, config, out);
  search->add_option("--parallel-seeds", opts.parallel_seeds, "independent replicas, seeds seed..seed+N-1");

  std::string study_name;
  auto* study = app.add_subcommand("study", "run a study: matthew, multiseed or interference");
  study->add_option("name", study_name, "study name")->required();
  add_run_flags(study, opts, config, out);

  std::string run_dir, export_out;
  auto* exporter = app.add_subcommand("export-plots", "rebuild plot CSVs from a run log");
  exporter->add_option("run_dir", run_dir, "directory holding run_log.jsonl")->required();
  exporter->add_option("--out", export_out, "destination directory (default: run_dir)");

  std::uint64_t gradcheck_seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks of every op");
  gradcheck->add_option("--seed", gradcheck_seed, "seed for the random shapes");

  std::string latency_csv;
  auto* latency = app.add_subcommand("measure-latency", "time every operator and write a latency CSV");
  add_run_flags(latency, opts, config, out);
  latency->add_option("--csv", latency_csv, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bdnas::kExitConfig;
  }
  if (!config.empty()) opts.config = config;
  if (!out.empty()) opts.out = out;

  if (*search) return bdnas::cmd_search(opts, std::cout, std::cerr);
  if (*study) return bdnas::cmd_study(study_name, opts, std::cout, std::cerr);
  if (*exporter) {
    std::optional<std::filesystem::path> dst;
    if (!export_out.empty()) dst = export_out;
    return bdnas::cmd_export_plots(run_dir, dst, std::cout, std::cerr);
  }
  if (*gradcheck) return bdnas::cmd_gradcheck(gradcheck_seed, std::cout, std::cerr);
  if (*latency) return bdnas::cmd_measure_latency(opts, latency_csv, std::cout, std::cerr);
  return bdnas::kExitFailure;
}
