// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is 0 only when all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bdnas/artifacts.hpp"
#include "bdnas/commands.hpp"
#include "bdnas/config.hpp"
#include "bdnas/engine.hpp"
#include "bdnas/experiments.hpp"
#include "bdnas/gradcheck_suite.hpp"
#include "bdnas/sampler.hpp"

using namespace bdnas;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// Logs collected from every search run here, for the drop-semantics check.
std::vector<std::pair<std::string, std::vector<RunLogRecord>>> g_logs;

Verdict gradient_correctness() {
  const auto t0 = Clock::now();
  const auto reports = run_gradcheck_suite({});
  const double secs = seconds_since(t0);
  bool ok = secs < 60;
  double worst = 0;
  std::string worst_op;
  int min_instances = 1 << 30;
  for (const auto& r : reports) {
    ok = ok && r.passed(1e-6) && r.instances >= 20;
    min_instances = std::min(min_instances, r.instances);
    if (r.max_rel_error >= worst) worst = r.max_rel_error, worst_op = r.op;
  }
  return {ok, std::to_string(reports.size()) + " ops, >= " + std::to_string(min_instances) +
                  " shapes each, max rel err " + fmt(worst) + " (" + worst_op + "), " + fmt(secs, 3) + " s"};
}

// Softmax over active entries and the double sum, both in long double.
std::vector<long double> oracle_alpha_grad(const std::vector<double>& alpha, const std::vector<double>& upstream,
                                           const std::vector<bool>& active) {
  const std::size_t m = alpha.size();
  long double peak = -INFINITY, z = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (active[i]) peak = std::max<long double>(peak, alpha[i]);
  std::vector<long double> p(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    if (active[i]) z += p[i] = std::exp(static_cast<long double>(alpha[i]) - peak);
  for (auto& v : p) v /= z;
  std::vector<long double> g(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    if (!active[k]) continue;
    for (std::size_t j = 0; j < m; ++j)
      if (active[j]) g[k] += upstream[j] * p[j] * ((k == j ? 1.0L : 0.0L) - p[k]);
  }
  return g;
}

Verdict estimator_oracle() {
  const auto t0 = Clock::now();
  RandomStream rng(2024, "acceptance/alpha_grad");
  double worst_rel = 0, worst_sum = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 2 + rng.below(7);
    std::vector<double> a(m), u(m);
    std::vector<bool> act(m);
    for (std::size_t i = 0; i < m; ++i) {
      a[i] = 3 * rng.normal();
      u[i] = rng.normal() * std::exp(rng.uniform(-3, 3));
      act[i] = rng.uniform() < 0.8;
    }
    act[rng.below(m)] = true;
    const auto g = alpha_grad(softmax_over_active(a, act), u, act);
    const auto want = oracle_alpha_grad(a, u, act);
    long double scale = 0, err = 0, sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
      scale = std::max(scale, std::abs(want[i]));
      err = std::max(err, std::abs(static_cast<long double>(g[i]) - want[i]));
      sum += g[i];
    }
    if (scale > 0) worst_rel = std::max(worst_rel, static_cast<double>(err / scale));
    else worst_rel = std::max(worst_rel, static_cast<double>(err));
    worst_sum = std::max(worst_sum, static_cast<double>(std::abs(sum)));
  }
  const bool ok = worst_rel < 1e-10 && worst_sum < 1e-10;
  return {ok, "1000 instances, max rel err " + fmt(worst_rel) + ", max |sum| " + fmt(worst_sum) + ", " +
                  fmt(seconds_since(t0), 3) + " s"};
}

// Upper tail of chi-square with an even number of degrees of freedom.
double chi_square_sf_even(double x, int dof) {
  const double h = x / 2;
  double term = 1, sum = 1;
  for (int i = 1; i < dof / 2; ++i) {
    term *= h / i;
    sum += term;
  }
  return std::exp(-h) * sum;
}

Verdict balanced_sampling() {
  const auto t0 = Clock::now();
  PlantedCurveOptions o;
  o.curves.assign(7, {0.8, 50});
  PlantedCurveModel model(o, 5);
  const auto cost = model.cost_table();
  RandomStream rng(5, "acceptance/phase1");
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) phase1_train_step(model, rng, Strategy::BalancedDrop, cost, 0.0);
  const auto& counts = model.blocks()[0].train_count;
  const double expect = draws / 7.0;
  const double sigma = std::sqrt(draws * (1.0 / 7) * (6.0 / 7));
  double chi2 = 0, worst_dev = 0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expect;
    chi2 += d * d / expect;
    worst_dev = std::max(worst_dev, std::abs(d) / sigma);
  }
  const double p = chi_square_sf_even(chi2, 6);
  const bool ok = worst_dev < 4 && p > 1e-4;
  return {ok, "max |count-10000| = " + fmt(worst_dev, 3) + " sigma, chi2 = " + fmt(chi2) + " (p = " + fmt(p) +
                  "), " + fmt(seconds_since(t0), 3) + " s"};
}

Verdict shift_invariance() {
  const auto t0 = Clock::now();
  RandomStream rng(7, "acceptance/shift");
  RandomStream init(7, "acceptance/init");
  SuperNetSpec spec;
  spec.height = spec.width = 8;
  spec.blocks = {{16, 16, 1}, {16, 24, 2}, {24, 24, 1}};
  auto base = build_search_space(spec, init);
  double worst_p = 0;
  bool samples_equal = true, selection_equal = true;
  for (int trial = 0; trial < 200; ++trial) {
    auto a = base;
    for (auto& b : a) {
      for (std::size_t m = 0; m < b.size(); ++m) {
        b.alpha.mutable_values()[m] = 2 * rng.normal();
        b.active[m] = rng.uniform() < 0.8;
      }
      b.active[rng.below(b.size())] = true;
    }
    auto shifted = a;
    for (auto& b : shifted) {
      b.alpha = b.alpha.detach();
      const double c = rng.uniform(-100, 100);
      for (auto& v : b.alpha.mutable_values()) v += c;
    }
    for (std::size_t l = 0; l < a.size(); ++l) {
      const auto pa = block_probabilities(a[l]), pb = block_probabilities(shifted[l]);
      for (std::size_t m = 0; m < pa.size(); ++m) worst_p = std::max(worst_p, std::abs(pa[m] - pb[m]));
    }
    RandomStream ra(trial, "acceptance/draws"), rb(trial, "acceptance/draws");
    for (int d = 0; d < 200; ++d)
      samples_equal = samples_equal && sample_path_by_p(a, ra, Phase::Architecture) ==
                                           sample_path_by_p(shifted, rb, Phase::Architecture);
    CostTable zero;
    for (const auto& b : a) zero.per_block.push_back(std::vector<double>(b.size(), 0.0));
    selection_equal = selection_equal && select_architecture(a, zero).choice == select_architecture(shifted, zero).choice;
  }
  const bool ok = worst_p <= 1e-12 && samples_equal && selection_equal;
  return {ok, "max |dp| " + fmt(worst_p) + ", draws " + (samples_equal ? "identical" : "DIFFER") + ", selection " +
                  (selection_equal ? "identical" : "DIFFERS") + ", " + fmt(seconds_since(t0), 3) + " s"};
}

Verdict beta_monotonicity() {
  const auto t0 = Clock::now();
  const auto scenario = cost_accuracy_scenario();
  // beta_1 puts the latency term at 20% of the initial CE; beta_2 = 10 beta_1.
  double ce0 = 0;
  for (const auto& c : scenario.curves) ce0 += 1 - c.at(0);
  ce0 /= static_cast<double>(scenario.curves.size());
  const double l0 = (scenario.curves.size() - 1) / 2.0;
  const double beta1 = 0.2 * ce0 / l0;
  const std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7};
  const auto points = run_beta_sweep(scenario, {0.0, beta1, 10 * beta1}, seeds, thread_cap());
  const double secs = seconds_since(t0);
  bool ok = secs < 15 * 60;
  std::string detail;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0) ok = ok && points[i].summary.mean <= points[i - 1].summary.mean;
    detail += "beta " + fmt(points[i].beta) + " -> mean cost " + fmt(points[i].summary.mean) + "; ";
  }
  return {ok, detail + std::to_string(seeds.size()) + " seeds, " + fmt(secs, 3) + " s"};
}

Verdict matthew_effect() {
  const auto t0 = Clock::now();
  const auto scenario = late_bloomer_scenario();
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 16; ++s) seeds.push_back(s);
  const auto report = run_matthew_study(scenario, seeds, {Strategy::BalancedDrop, Strategy::ProxylessLike}, thread_cap());
  const double secs = seconds_since(t0);
  const auto& balanced = report.strategies.at(0);
  const auto& proxyless = report.strategies.at(1);
  double lo = 1e9, hi = -1e9;
  for (const auto& rep : balanced.replicas)
    for (const auto& round : rep.rounds) {
      const double m = static_cast<double>(std::count(round.active.begin(), round.active.end(), true));
      for (std::size_t j = 0; j < round.share.size(); ++j)
        if (round.active[j]) {
          lo = std::min(lo, round.share[j] * m);
          hi = std::max(hi, round.share[j] * m);
        }
    }
  double leader = 0;
  for (const auto& rep : proxyless.replicas) {
    const auto& last = rep.rounds.back();
    const double m = static_cast<double>(std::count(last.active.begin(), last.active.end(), true));
    leader += last.share[report.leader] * m;
  }
  leader /= static_cast<double>(proxyless.replicas.size());
  const double rb = balanced.recovery_rate(report.best), rp = proxyless.recovery_rate(report.best);
  const bool ok = rb >= rp && lo >= 0.7 && hi <= 1.3 && leader > 1.5 && secs < 30 * 60;
  return {ok, "recovery balanced " + fmt(rb) + " vs proxyless " + fmt(rp) + " over " + std::to_string(seeds.size()) +
                  " seeds; balanced share*M' in [" + fmt(lo) + ", " + fmt(hi) + "]; proxyless leader share*M' " +
                  fmt(leader) + "; " + fmt(secs, 3) + " s"};
}

Verdict branch_interference(const RunConfig& config, const DatasetHandle& data) {
  const auto t0 = Clock::now();
  const auto report = run_interference_study(interference_options(config, thread_cap()), data);
  const double secs = seconds_since(t0);
  const auto b2 = report.accuracy("B2"), b4 = report.accuracy("B4"), ns = report.accuracy("NS");
  const auto t2 = report.tau("NS-B2"), t4 = report.tau("NS-B4");
  const auto m2 = report.tau("NSmean-B2"), m4 = report.tau("NSmean-B4");
  const bool ok = b2.mean > b4.mean && t2.mean >= t4.mean && t2.n >= 5 && secs < 45 * 60;
  return {ok, "accuracy NS " + fmt(ns.mean) + ", B2 " + fmt(b2.mean) + ", B4 " + fmt(b4.mean) +
                  "; tau vs same-seed NS: B2 " + fmt(t2.mean) + ", B4 " + fmt(t4.mean) +
                  " (vs seed-averaged NS: B2 " + fmt(m2.mean) + ", B4 " + fmt(m4.mean) + ") over " +
                  std::to_string(t2.n) + " seeds; " + fmt(secs, 3) + " s"};
}

Verdict multiseed_robustness(const RunConfig& config, const DatasetHandle& data) {
  const auto t0 = Clock::now();
  const auto report = run_multiseed(config.space, data, multiseed_options(config, thread_cap()));
  const double secs = seconds_since(t0);
  const double spread = report.searched.max - report.searched.min;
  const bool ok = report.searched.n == 8 && spread < 0.05 && report.searched.mean >= report.random.mean &&
                  secs < 60 * 60;
  return {ok, "searched mean " + fmt(report.searched.mean) + " (spread " + fmt(100 * spread, 3) +
                  " points, n=" + std::to_string(report.searched.n) + ") vs random " + fmt(report.random.mean) +
                  " (n=" + std::to_string(report.random.n) + "); " + fmt(secs, 3) + " s"};
}

Verdict end_to_end_determinism(const RunConfig& config, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  write_text_file(work / "config.json", effective_config(config).dump(2));
  // Both runs write to the same directory; the first is moved aside so every
  // file, including effective_config.json with its output_dir, is compared.
  std::vector<double> secs;
  for (int run = 0; run < 2; ++run) {
    CliOptions cli;
    cli.config = work / "config.json";
    cli.out = work / "run";
    std::ostringstream out, err;
    const auto t0 = Clock::now();
    const int code = cmd_search(cli, out, err);
    secs.push_back(seconds_since(t0));
    if (code != kExitOk) return {false, std::string("search exited ") + std::to_string(code) + ": " + err.str()};
    if (run == 0) fs::rename(work / "run", work / "first");
  }
  bool same = true;
  std::string differing;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(work / "first")) {
    const auto name = entry.path().filename();
    ++files;
    if (!fs::exists(work / "run" / name) || read_text_file(entry.path()) != read_text_file(work / "run" / name)) {
      same = false;
      differing += " " + name.string();
    }
  }
  for (const auto& entry : fs::directory_iterator(work / "run")) {
    if (!fs::exists(work / "first" / entry.path().filename())) {
      same = false;
      differing += " " + entry.path().filename().string();
    }
  }
  g_logs.emplace_back("desk search", read_run_log(work / "run" / "run_log.jsonl").records);
  const bool ok = same && files >= 5 && config.space.blocks.size() == 4 && secs[0] < 600 && secs[1] < 600;
  return {ok, std::to_string(files) + (same ? " output files byte-identical" : " output files, differ:" + differing) + "; " +
                  std::to_string(config.space.blocks.size()) + "-block search " + fmt(secs[0], 3) + " s"};
}

Verdict drop_semantics() {
  // Planted four-block searches under every strategy add to the desk logs.
  PlantedCurveOptions o;
  o.curves = {{0.9, 20}, {0.5, 10}, {0.6, 30}, {0.55, 20}, {0.4, 5}, {0.45, 15}, {0.3, 40}};
  o.num_blocks = 4;
  for (auto strategy : {Strategy::BalancedDrop, Strategy::ProxylessLike, Strategy::OneshotUniform})
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      PlantedCurveModel model(o, seed);
      const auto cost = model.cost_table();
      SearchConfig c;
      c.s_max = 8;
      c.phase1_steps = 70;
      c.phase2_steps = 20;
      c.lr_alpha = 0.05;
      c.seed = seed;
      c.strategy = strategy;
      g_logs.emplace_back(to_string(strategy) + " seed " + std::to_string(seed),
                          run_search(c, model, {&cost, &cost, nullptr}).log);
    }
  std::size_t records = 0, drops = 0;
  for (const auto& [name, log] : g_logs) {
    if (auto problem = check_drop_semantics(log); !problem.empty()) return {false, name + ": " + problem};
    records += log.size();
    const auto& first = log.front().active;
    const auto& last = log.back().active;
    for (std::size_t l = 0; l < first.size(); ++l)
      drops += static_cast<std::size_t>(std::count(first[l].begin(), first[l].end(), true) -
                                        std::count(last[l].begin(), last[l].end(), true));
  }
  return {drops > 0, std::to_string(g_logs.size()) + " run logs, " + std::to_string(records) + " records, " +
                         std::to_string(drops) + " drops, all clean (Matthew, sweep and multiseed runs assert "
                         "the same check internally)"};
}

}  // namespace

int main() {
  const RunConfig config = default_run_config();
  validate_run_config(config);
  const DatasetHandle data = load_dataset(config.data);
  const fs::path work = fs::temp_directory_path() / "bdnas_acceptance";

  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  // Determinism runs before drop semantics so its log is included there.
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness},
      {2, "alpha gradient estimator", estimator_oracle},
      {3, "balanced sampling", balanced_sampling},
      {10, "end-to-end determinism", [&] { return end_to_end_determinism(config, work); }},
      {4, "drop semantics", drop_semantics},
      {5, "shift invariance", shift_invariance},
      {6, "beta monotonicity", beta_monotonicity},
      {7, "Matthew effect", matthew_effect},
      {8, "branch interference", [&] { return branch_interference(config, data); }},
      {9, "multi-seed robustness", [&] { return multiseed_robustness(config, data); }},
  };
  std::vector<std::pair<int, std::string>> lines;
  bool all = true;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all = all && v.pass;
    std::string line = std::string(v.pass ? "PASS" : "FAIL") + " [" + std::to_string(c.id) + "] " + c.name + ": " +
                       v.detail;
    std::cout << line << std::endl;
    lines.emplace_back(c.id, line);
  }
  std::sort(lines.begin(), lines.end());
  std::cout << "\nsummary\n";
  for (const auto& [id, line] : lines) std::cout << line.substr(0, line.find(':')) << "\n";
  return all ? 0 : 1;
}
