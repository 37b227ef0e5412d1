#include "bdnas/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "bdnas/parallel.hpp"
#include "bdnas/sampler.hpp"

namespace bdnas {

// ---- rank correlation ------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rankings differ in length");
  if (a.size() < 2) throw std::invalid_argument("rank correlation needs at least two entries");
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  double concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int s = sign(a[i] - a[j]) * sign(b[i] - b[j]);
      if (s > 0) ++concordant;
      if (s < 0) ++discordant;
      if (a[i] == a[j]) ++ties_a;
      if (b[i] == b[j]) ++ties_b;
    }
  }
  const double pairs = static_cast<double>(a.size() * (a.size() - 1) / 2);
  const double denom = std::sqrt((pairs - ties_a) * (pairs - ties_b));
  return denom > 0 ? (concordant - discordant) / denom : 0.0;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  if (s.n > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

// ---- planted learning curves -----------------------------------------------

double LearningCurve::at(double n) const { return a_inf * (1.0 - std::exp(-n / tau)); }

void LearningCurve::validate() const {
  if (!(a_inf > 0 && a_inf <= 1)) throw ConfigError("learning curve a_inf must lie in (0, 1]");
  if (!(tau > 0)) throw ConfigError("learning curve tau must be positive");
}

namespace {

std::vector<OperatorSpec> placeholder_specs(std::size_t m) {
  auto specs = candidate_specs({4, 4, 1});
  if (m == 0 || m > specs.size()) {
    throw ConfigError("planted model supports 1 to " + std::to_string(specs.size()) + " operators");
  }
  specs.resize(m);
  return specs;
}

}  // namespace

PlantedCurveModel::PlantedCurveModel(PlantedCurveOptions options, std::uint64_t seed)
    : options_(std::move(options)), noise_(seed, "planted/noise") {
  for (const auto& c : options_.curves) c.validate();
  if (options_.num_blocks == 0) throw ConfigError("planted model needs at least one block");
  if (!options_.costs.empty() && options_.costs.size() != options_.curves.size()) {
    throw ConfigError("planted costs must have one entry per operator");
  }
  const auto specs = placeholder_specs(options_.curves.size());
  RandomStream init(seed, "planted/init");
  for (std::size_t l = 0; l < options_.num_blocks; ++l) {
    auto rng = init.split("block" + std::to_string(l));
    blocks_.push_back(make_choice_block(specs, rng));
  }
}

double PlantedCurveModel::error(std::size_t block, std::size_t op) const {
  return 1.0 - options_.curves.at(op).at(static_cast<double>(blocks_.at(block).train_count.at(op)));
}

double PlantedCurveModel::path_error(const PathSample& path) const {
  double e = 0;
  for (std::size_t l = 0; l < blocks_.size(); ++l) e += error(l, path.choice.at(l));
  return e / static_cast<double>(blocks_.size());
}

double PlantedCurveModel::train_path(const PathSample& path) {
  validate_path(blocks_, path);
  const double ce = path_error(path) + options_.noise * noise_.normal();
  ++weight_steps_;
  return ce;
}

PathFeedback PlantedCurveModel::evaluate_path(const PathSample& path, bool want_upstream) {
  validate_path(blocks_, path);
  PathFeedback fb;
  const double base = path_error(path);
  fb.ce = base + options_.noise * noise_.normal();
  if (!want_upstream) return fb;
  const double nb = static_cast<double>(blocks_.size());
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const auto& block = blocks_[l];
    const double others = base - error(l, path.choice[l]) / nb;
    std::vector<Real> up(block.size(), Real{0});
    for (std::size_t j = 0; j < block.size(); ++j) {
      if (block.active[j]) up[j] = others + error(l, j) / nb + options_.noise * noise_.normal();
    }
    fb.upstream.push_back(std::move(up));
  }
  return fb;
}

CostTable PlantedCurveModel::cost_table() const {
  CostTable t;
  t.kind = CostKind::Flops;
  const auto row = options_.costs.empty() ? std::vector<double>(options_.curves.size(), 0.0) : options_.costs;
  t.per_block.assign(blocks_.size(), row);
  return t;
}

// ---- frequency-feedback study ----------------------------------------------

MatthewScenario late_bloomer_scenario() {
  MatthewScenario s;
  s.curves = {
      {0.80, 40},   // fast starter, early leader
      {0.76, 30},   // fast starter
      {0.72, 50},
      {0.70, 80},
      {0.68, 60},
      {0.66, 100},
      {0.98, 360},  // late bloomer
  };
  s.search.s_max = 14;
  s.search.phase1_steps = 1000;
  s.search.phase2_steps = 10;
  s.search.th_p = 0.05;
  s.search.lr_alpha = 0.02;
  s.noise = 0.02;
  return s;
}

std::size_t planted_best(const std::vector<LearningCurve>& curves) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < curves.size(); ++j) {
    if (curves[j].a_inf > curves[best].a_inf) best = j;
  }
  return best;
}

std::size_t early_leader(const MatthewScenario& scenario) {
  const double n = static_cast<double>(scenario.search.phase1_steps) / static_cast<double>(scenario.curves.size());
  std::size_t best = 0;
  for (std::size_t j = 1; j < scenario.curves.size(); ++j) {
    if (scenario.curves[j].at(n) > scenario.curves[best].at(n)) best = j;
  }
  return best;
}

std::size_t MatthewStrategyReport::recovered(std::size_t best) const {
  return static_cast<std::size_t>(
      std::count_if(replicas.begin(), replicas.end(), [&](const MatthewReplica& r) { return r.selected == best; }));
}

double MatthewStrategyReport::recovery_rate(std::size_t best) const {
  return replicas.empty() ? 0.0 : static_cast<double>(recovered(best)) / static_cast<double>(replicas.size());
}

namespace {

MatthewRound round_snapshot(int round, const std::vector<std::int64_t>& counts, const std::vector<bool>& active) {
  MatthewRound r;
  r.round = round;
  r.train_count = counts;
  r.active = active;
  double total = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (active[j]) total += static_cast<double>(counts[j]);
  }
  r.share.assign(counts.size(), 0.0);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (active[j] && total > 0) r.share[j] = static_cast<double>(counts[j]) / total;
  }
  return r;
}

}  // namespace

MatthewReport run_matthew_study(const MatthewScenario& scenario, const std::vector<std::uint64_t>& seeds,
                                const std::vector<Strategy>& strategies, int threads) {
  MatthewReport report;
  report.best = planted_best(scenario.curves);
  report.leader = early_leader(scenario);
  report.strategies.resize(strategies.size());
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    report.strategies[s].strategy = strategies[s];
    report.strategies[s].replicas.resize(seeds.size());
  }

  parallel_for(strategies.size() * seeds.size(), threads, [&](std::size_t k) {
    const std::size_t s = k / seeds.size(), i = k % seeds.size();
    SearchConfig config = scenario.search;
    config.seed = seeds[i];
    config.strategy = strategies[s];
    PlantedCurveModel model({scenario.curves, 1, scenario.noise, {}}, seeds[i]);
    const CostTable cost = model.cost_table();
    MatthewReplica replica;
    replica.seed = seeds[i];
    auto outcome = run_search(config, model, {&cost, &cost, nullptr}, [&](const RunLogRecord& rec) {
      if (rec.phase == 1 && rec.inner_step == config.phase1_steps - 1) {
        replica.rounds.push_back(round_snapshot(rec.t, rec.train_count[0], rec.active[0]));
      }
    });
    if (auto problem = check_drop_semantics(outcome.log); !problem.empty()) throw std::logic_error(problem);
    replica.selected = outcome.result.choice[0];
    report.strategies[s].replicas[i] = std::move(replica);
  });
  return report;
}

MeanFieldResult mean_field_matthew(const MatthewScenario& scenario, Strategy strategy) {
  const auto& cfg = scenario.search;
  RandomStream init(0, "meanfield/init");
  std::vector<ChoiceBlock> blocks;
  blocks.push_back(make_choice_block(placeholder_specs(scenario.curves.size()), init));
  auto& block = blocks[0];
  AlphaOptimizer optimizer(blocks, cfg.lr_alpha, {cfg.adam_beta1, cfg.adam_beta2}, cfg.adam_eps);
  std::vector<double> counts(block.size(), 0.0);
  MeanFieldResult out;

  auto train = [&] {
    const auto p = block_probabilities(block);
    const double m_active = static_cast<double>(block.num_active());
    for (std::size_t j = 0; j < block.size(); ++j) {
      if (!block.active[j]) continue;
      const double q = strategy == Strategy::ProxylessLike ? p[j] : 1.0 / m_active;
      counts[j] += cfg.phase1_steps * q;
    }
    out.counts.push_back(counts);
  };
  auto update = [&](int steps) {
    for (int i = 0; i < steps; ++i) {
      const auto p = block_probabilities(block);
      std::vector<Real> up(block.size(), 0.0);
      for (std::size_t j = 0; j < block.size(); ++j) up[j] = 1.0 - scenario.curves[j].at(counts[j]);
      optimizer.step(blocks, {alpha_grad(p, up, block.active)});
    }
  };

  if (strategy == Strategy::OneshotUniform) {
    for (int t = 0; t < cfg.s_max; ++t) train();
    update(cfg.s_max * cfg.phase2_steps);
  } else {
    for (int t = 0; t < cfg.s_max; ++t) {
      train();
      update(cfg.phase2_steps);
      drop_paths(blocks, cfg.th_p);
    }
  }
  out.selected = argmax_active(block);
  out.active = block.active;
  return out;
}

// ---- latency-weight sweep ---------------------------------------------------

MatthewScenario cost_accuracy_scenario() {
  MatthewScenario s;
  s.curves = {{0.30, 5}, {0.45, 5}, {0.57, 5}, {0.67, 5}, {0.75, 5}, {0.81, 5}, {0.85, 5}};
  s.search.s_max = 8;
  s.search.phase1_steps = 100;
  s.search.phase2_steps = 20;
  s.search.th_p = 0.05;
  s.search.lr_alpha = 0.02;
  s.noise = 0.02;
  return s;
}

std::vector<BetaSweepPoint> run_beta_sweep(const MatthewScenario& scenario, const std::vector<double>& betas,
                                           const std::vector<std::uint64_t>& seeds, int threads) {
  std::vector<double> costs(scenario.curves.size());
  for (std::size_t j = 0; j < costs.size(); ++j) costs[j] = static_cast<double>(j);
  std::vector<BetaSweepPoint> points(betas.size());
  for (std::size_t b = 0; b < betas.size(); ++b) {
    points[b].beta = betas[b];
    points[b].flops.resize(seeds.size());
  }
  parallel_for(betas.size() * seeds.size(), threads, [&](std::size_t k) {
    const std::size_t b = k / seeds.size(), i = k % seeds.size();
    SearchConfig config = scenario.search;
    config.seed = seeds[i];
    config.beta = betas[b];
    PlantedCurveModel model({scenario.curves, 1, scenario.noise, costs}, seeds[i]);
    const CostTable cost = model.cost_table();
    auto outcome = run_search(config, model, {&cost, &cost, nullptr});
    if (auto problem = check_drop_semantics(outcome.log); !problem.empty()) throw std::logic_error(problem);
    points[b].flops[i] = outcome.result.flops;
  });
  for (auto& p : points) p.summary = summarize(p.flops);
  return points;
}

// ---- desk network studies ---------------------------------------------------

DatasetHandle make_desk_dataset(const DeskSetup& setup) {
  auto data = gen_synthetic(setup.data_seed, setup.data);
  data.assign_splits(setup.splits, setup.data_seed);
  return data;
}

NeuralSearchRun run_neural_search(const SearchConfig& config, const SuperNetSpec& space, const DatasetHandle& data,
                                  const LatencyTable* latency,
                                  const std::function<void(const RunLogRecord&)>& on_record) {
  SuperNet net(space, RandomStream(config.seed, "search/init"));
  NeuralSearchModel model(net, data,
                          {static_cast<std::size_t>(config.batch_size), config.lr_w, config.momentum_w, config.seed});
  NeuralSearchRun run;
  run.flops = build_flops_table(space, net.blocks());
  std::optional<CostTable> lat;
  if (latency) lat = build_latency_table(space, net.blocks(), latency, false);
  if (config.cost_kind == CostKind::LatencyProxy && !lat) {
    throw ConfigError("cost_kind latency_proxy needs a latency table");
  }
  const CostTable* objective = config.cost_kind == CostKind::LatencyProxy ? &*lat : &run.flops;
  run.outcome = run_search(config, model, {objective, &run.flops, lat ? &*lat : nullptr}, on_record);
  return run;
}

namespace {

std::vector<OperatorSpec> specs_of(const std::vector<ChoiceBlock>& blocks, const std::vector<std::size_t>& choice) {
  std::vector<OperatorSpec> out;
  for (std::size_t l = 0; l < blocks.size(); ++l) out.push_back(blocks[l].operators.at(choice[l]).spec);
  return out;
}

}  // namespace

MultiseedReport run_multiseed(const SuperNetSpec& space, const DatasetHandle& data, const MultiseedOptions& options) {
  if (options.n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  const std::size_t n = static_cast<std::size_t>(options.n_seeds);
  RandomStream reference_init(0, "multiseed/reference");
  const auto reference = build_search_space(space, reference_init);
  const CostTable flops = build_flops_table(space, reference);

  MultiseedReport report;
  std::vector<MultiseedEntry> searched(n), random(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    SearchConfig config = options.search;
    config.seed = options.search.seed + i;
    auto run = run_neural_search(config, space, data);
    if (auto problem = check_drop_semantics(run.outcome.log); !problem.empty()) throw std::logic_error(problem);
    searched[i] = {config.seed, "searched", run.outcome.result.choice, run.outcome.result.flops, 0};
  });

  std::vector<double> searched_flops;
  for (const auto& e : searched) searched_flops.push_back(e.flops);
  report.target_flops = summarize(searched_flops).mean;
  const double lo = report.target_flops * (1 - options.flops_window);
  const double hi = report.target_flops * (1 + options.flops_window);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rng(searched[i].seed, "baseline/random");
    bool found = false;
    for (int draw = 0; draw < options.max_baseline_draws && !found; ++draw) {
      std::vector<std::size_t> choice;
      for (const auto& b : reference) choice.push_back(static_cast<std::size_t>(rng.below(b.size())));
      const double f = flops.path_total(choice);
      if (f >= lo && f <= hi) {
        random[i] = {searched[i].seed, "random", choice, f, 0};
        found = true;
      }
    }
    if (!found) throw std::runtime_error("no random architecture within the FLOPs window");
  }

  parallel_for(2 * n, options.threads, [&](std::size_t k) {
    auto& entry = k < n ? searched[k] : random[k - n];
    StandaloneOptions train = options.train;
    train.seed = entry.seed;
    entry.accuracy = train_standalone(space, specs_of(reference, entry.choice), data, train);
  });

  std::vector<double> acc_s, acc_r;
  for (std::size_t i = 0; i < n; ++i) {
    report.entries.push_back(searched[i]);
    acc_s.push_back(searched[i].accuracy);
  }
  for (std::size_t i = 0; i < n; ++i) {
    report.entries.push_back(random[i]);
    acc_r.push_back(random[i].accuracy);
  }
  report.searched = summarize(acc_s);
  report.random = summarize(acc_r);
  return report;
}

namespace {

const char* const kArchIds[] = {"00", "01", "10", "11"};

// Trains `net` with a uniformly sampled path per step over `data.weight_train`.
void train_uniform(SuperNet& net, const DatasetHandle& data, int epochs, const InterferenceOptions& o,
                   RandomStream path_rng, std::uint64_t seed) {
  NeuralSearchModel model(net, data, {o.batch_size, o.lr, o.momentum, seed});
  const std::size_t steps = std::max<std::size_t>(1, data.weight_train.size() / o.batch_size) *
                            static_cast<std::size_t>(epochs);
  for (std::size_t s = 0; s < steps; ++s) {
    model.set_learning_rate(cosine_lr(o.lr, s, steps));
    model.train_path(sample_path_uniform(net.blocks(), path_rng, Phase::Network));
  }
}

std::size_t index_of_kernel(const std::vector<int>& kernels, int k) {
  auto it = std::find(kernels.begin(), kernels.end(), k);
  if (it == kernels.end()) throw ConfigError("branch family must contain conv" + std::to_string(k));
  return static_cast<std::size_t>(it - kernels.begin());
}

std::vector<ChoiceBlock> conv_blocks(const SuperNetSpec& space, const std::vector<int>& kernels, RandomStream& init) {
  std::vector<ChoiceBlock> blocks;
  for (std::size_t l = 0; l < space.blocks.size(); ++l) {
    const auto& d = space.blocks[l];
    std::vector<OperatorSpec> specs;
    for (int k : kernels) specs.push_back(OperatorSpec::conv(k, d.stride, d.in_channels, d.out_channels));
    auto rng = init.split("block" + std::to_string(l));
    blocks.push_back(make_choice_block(specs, rng));
  }
  return blocks;
}

}  // namespace

Summary InterferenceReport::accuracy(const std::string& group) const {
  std::vector<double> v;
  for (const auto& t : trials) {
    if (t.group == group) v.push_back(t.accuracy);
  }
  return summarize(v);
}

Summary InterferenceReport::tau(const std::string& pairing) const {
  std::vector<double> v;
  for (const auto& r : ranks) {
    if (r.pairing == pairing) v.push_back(r.tau);
  }
  return summarize(v);
}

Summary InterferenceReport::rho(const std::string& pairing) const {
  std::vector<double> v;
  for (const auto& r : ranks) {
    if (r.pairing == pairing) v.push_back(r.rho);
  }
  return summarize(v);
}

InterferenceReport run_interference_study(const InterferenceOptions& o, const DatasetHandle& dataset) {
  const auto& space = o.space;
  if (space.blocks.size() != 2) throw ConfigError("interference study needs exactly two blocks");
  if (o.ns_epochs < 1) throw ConfigError("ns_epochs must be >= 1");
  const std::vector<int> b2_kernels = {1, 3};
  const std::size_t b4_k1 = index_of_kernel(o.b4_kernels, 1), b4_k3 = index_of_kernel(o.b4_kernels, 3);

  DatasetHandle data = dataset;
  data.weight_train.insert(data.weight_train.end(), data.alpha_train.begin(), data.alpha_train.end());
  data.alpha_train.clear();

  const std::size_t ns = o.seeds.size();
  // acc[seed][group][arch], group 0 = NS, 1 = B2, 2 = B4.
  std::vector<std::array<std::array<double, 4>, 3>> acc(ns);
  // 4 NS trainings plus one B2 and one B4 supernet per seed.
  parallel_for(ns * 6, o.threads, [&](std::size_t k) {
    const std::size_t i = k / 6, job = k % 6;
    const std::uint64_t seed = o.seeds[i];
    if (job < 4) {
      RandomStream init(seed, std::string("interference/NS/") + kArchIds[job]);
      const std::vector<int> ks = {job & 2 ? 3 : 1, job & 1 ? 3 : 1};
      std::vector<ChoiceBlock> blocks;
      for (std::size_t l = 0; l < 2; ++l) {
        const auto& d = space.blocks[l];
        auto rng = init.split("block" + std::to_string(l));
        blocks.push_back(make_choice_block({OperatorSpec::conv(ks[l], d.stride, d.in_channels, d.out_channels)}, rng));
      }
      SuperNet net(space, std::move(blocks), init);
      train_uniform(net, data, o.ns_epochs, o, RandomStream(seed, "interference/NS/paths"), seed);
      acc[i][0][job] = evaluate_accuracy(net, PathSample{{0, 0}, Phase::Network}, data, data.eval);
      return;
    }
    const bool b4 = job == 5;
    const auto& kernels = b4 ? o.b4_kernels : b2_kernels;
    const std::string group = b4 ? "B4" : "B2";
    RandomStream init(seed, "interference/" + group);
    SuperNet net(space, conv_blocks(space, kernels, init), init);
    const int epochs = o.ns_epochs * (b4 ? 4 : 2);
    train_uniform(net, data, epochs, o, RandomStream(seed, "interference/" + group + "/paths"), seed);
    const std::size_t k1 = b4 ? b4_k1 : 0, k3 = b4 ? b4_k3 : 1;
    for (std::size_t a = 0; a < 4; ++a) {
      const PathSample path{{a & 2 ? k3 : k1, a & 1 ? k3 : k1}, Phase::Network};
      acc[i][b4 ? 2 : 1][a] = evaluate_accuracy(net, path, data, data.eval);
    }
  });

  InterferenceReport report;
  const char* const groups[] = {"NS", "B2", "B4"};
  const int epochs[] = {o.ns_epochs, 2 * o.ns_epochs, 4 * o.ns_epochs};
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t g = 0; g < 3; ++g) {
      for (std::size_t a = 0; a < 4; ++a) {
        report.trials.push_back({groups[g], kArchIds[a], o.seeds[i], epochs[g], acc[i][g][a]});
      }
    }
  }
  // NS-Bx ranks against the NS run of the same seed; NSmean-Bx against the
  // seed-averaged NS accuracies.
  std::array<double, 4> ns_mean{};
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t a = 0; a < 4; ++a) ns_mean[a] += acc[i][0][a] / static_cast<double>(ns);
  for (const bool per_seed : {true, false}) {
    for (std::size_t g = 1; g < 3; ++g) {
      for (std::size_t i = 0; i < ns; ++i) {
        const auto& ref = per_seed ? acc[i][0] : ns_mean;
        const auto& cmp = acc[i][g];
        report.ranks.push_back({std::string(per_seed ? "NS-" : "NSmean-") + groups[g], o.seeds[i],
                                kendall_tau(ref, cmp), spearman_rho(ref, cmp)});
      }
    }
  }
  return report;
}

}  // namespace bdnas
