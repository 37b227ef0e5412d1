#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdnas/data.hpp"
#include "bdnas/engine.hpp"
#include "bdnas/neural.hpp"

namespace bdnas {

// ---- rank correlation ------------------------------------------------------

/// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Kendall tau-b. Throws std::invalid_argument on a length mismatch or fewer
/// than two entries; returns 0 when either side is constant.
double kendall_tau(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of the average ranks. Same error contract as
/// kendall_tau.
double spearman_rho(std::span<const double> a, std::span<const double> b);

struct Summary {
  std::size_t n = 0;
  double mean = 0;
  double stddev = 0;  // sample standard deviation, 0 when n < 2
  double min = 0;
  double max = 0;
};
Summary summarize(std::span<const double> values);

// ---- planted learning curves -----------------------------------------------

/// Standalone accuracy after n training steps: a_inf · (1 − exp(−n / tau)).
struct LearningCurve {
  double a_inf = 1.0;
  double tau = 1.0;

  double at(double n) const;
  /// Throws ConfigError unless a_inf ∈ (0, 1] and tau > 0.
  void validate() const;
};

struct PlantedCurveOptions {
  /// One curve per operator, shared by every block.
  std::vector<LearningCurve> curves;
  std::size_t num_blocks = 1;
  /// Standard deviation of the Gaussian noise on every reported loss.
  double noise = 0.02;
  /// Per-operator cost for the latency term; empty means all zero.
  std::vector<double> costs;
};

/// A SearchModel without a network: operator j of block l has error
/// 1 − a_j(train_count[l][j]). Phase 2 sees, for every active operator, the
/// path error with that block swapped to it, plus noise.
class PlantedCurveModel final : public SearchModel {
 public:
  PlantedCurveModel(PlantedCurveOptions options, std::uint64_t seed);

  std::vector<ChoiceBlock>& blocks() override { return blocks_; }
  double train_path(const PathSample& path) override;
  PathFeedback evaluate_path(const PathSample& path, bool want_upstream) override;
  std::uint64_t weights_checksum() const override { return weight_steps_; }

  double error(std::size_t block, std::size_t op) const;
  CostTable cost_table() const;
  const PlantedCurveOptions& options() const { return options_; }

 private:
  double path_error(const PathSample& path) const;

  PlantedCurveOptions options_;
  std::vector<ChoiceBlock> blocks_;
  RandomStream noise_;
  std::uint64_t weight_steps_ = 0;
};

// ---- frequency-feedback study ----------------------------------------------

struct MatthewScenario {
  std::vector<LearningCurve> curves;
  /// Engine settings; seed and strategy are overridden per replica.
  SearchConfig search;
  double noise = 0.02;
};

/// One late bloomer (highest a_inf, largest tau) against fast starters.
MatthewScenario late_bloomer_scenario();

/// Operator with the highest a_inf (lowest index on ties).
std::size_t planted_best(const std::vector<LearningCurve>& curves);
/// Operator with the highest accuracy after one uniform round of Phase 1.
std::size_t early_leader(const MatthewScenario& scenario);

struct MatthewRound {
  int round = 0;
  std::vector<std::int64_t> train_count;
  std::vector<bool> active;
  /// train_count / Σ active train_count; 0 for dropped operators.
  std::vector<double> share;
};

struct MatthewReplica {
  std::uint64_t seed = 0;
  std::size_t selected = 0;
  /// State at the end of each round's Phase 1, block 0.
  std::vector<MatthewRound> rounds;
};

struct MatthewStrategyReport {
  Strategy strategy = Strategy::BalancedDrop;
  std::vector<MatthewReplica> replicas;

  std::size_t recovered(std::size_t best) const;
  double recovery_rate(std::size_t best) const;
};

struct MatthewReport {
  std::size_t best = 0;
  std::size_t leader = 0;
  std::vector<MatthewStrategyReport> strategies;
};

/// Runs the real engine on a PlantedCurveModel for every (strategy, seed).
MatthewReport run_matthew_study(const MatthewScenario& scenario, const std::vector<std::uint64_t>& seeds,
                                const std::vector<Strategy>& strategies = {Strategy::BalancedDrop,
                                                                           Strategy::ProxylessLike},
                                int threads = 1);

struct MeanFieldResult {
  std::size_t selected = 0;
  /// Expected train counts after each round's Phase 1.
  std::vector<std::vector<double>> counts;
  std::vector<bool> active;
};

/// Noise-free expected dynamics of one block: Phase 1 adds phase1_steps · q
/// to the counts (q uniform over active, or p for ProxylessLike), Phase 2
/// takes Adam steps on the exact expected gradient, then the drop rule.
MeanFieldResult mean_field_matthew(const MatthewScenario& scenario, Strategy strategy);

// ---- latency-weight sweep ---------------------------------------------------

struct BetaSweepPoint {
  double beta = 0;
  std::vector<double> flops;  // selected-architecture cost per seed
  Summary summary;
};

/// Planted space whose operator costs rise with their converged accuracy.
MatthewScenario cost_accuracy_scenario();

std::vector<BetaSweepPoint> run_beta_sweep(const MatthewScenario& scenario, const std::vector<double>& betas,
                                           const std::vector<std::uint64_t>& seeds, int threads = 1);

// ---- desk network studies ---------------------------------------------------

struct DeskSetup {
  SuperNetSpec space;
  SyntheticOptions data;
  std::uint64_t data_seed = 0;
  SplitFractions splits;
};

/// Builds the dataset and assigns splits from `data_seed`.
DatasetHandle make_desk_dataset(const DeskSetup& setup);

struct NeuralSearchRun {
  SearchOutcome outcome;
  CostTable flops;
};

/// One full search on a fresh SuperNet initialised from `config.seed`.
NeuralSearchRun run_neural_search(const SearchConfig& config, const SuperNetSpec& space, const DatasetHandle& data,
                                  const LatencyTable* latency = nullptr,
                                  const std::function<void(const RunLogRecord&)>& on_record = {});

struct MultiseedOptions {
  SearchConfig search;
  StandaloneOptions train;
  int n_seeds = 8;
  /// Random baseline FLOPs must lie within ±window of the searched mean.
  double flops_window = 0.10;
  int max_baseline_draws = 100000;
  int threads = 1;
};

struct MultiseedEntry {
  std::uint64_t seed = 0;
  std::string kind;  // "searched" or "random"
  std::vector<std::size_t> choice;
  double flops = 0;
  double accuracy = 0;
};

struct MultiseedReport {
  std::vector<MultiseedEntry> entries;
  Summary searched;
  Summary random;
  double target_flops = 0;
};

/// Seeds are search.seed, search.seed + 1, ... Searches use the weight- and
/// alpha-train splits; standalone training uses both, accuracy is on eval.
MultiseedReport run_multiseed(const SuperNetSpec& space, const DatasetHandle& data, const MultiseedOptions& options);

struct InterferenceOptions {
  SuperNetSpec space;  // exactly two blocks; candidates are replaced by convs
  int ns_epochs = 3;  // B2 trains 2x, B4 4x
  std::size_t batch_size = 16;
  double lr = 0.01;
  double momentum = 0.9;
  std::vector<int> b4_kernels = {1, 3, 5, 7};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  int threads = 1;
};

struct InterferenceTrial {
  std::string group;  // NS, B2, B4
  std::string arch;   // "00", "01", "10", "11": conv1/conv3 per block
  std::uint64_t seed = 0;
  int epochs = 0;
  double accuracy = 0;
};

struct RankPairing {
  std::string pairing;  // "NS-B2", "NS-B4", or "NSmean-B2", "NSmean-B4" against seed-averaged NS
  std::uint64_t seed = 0;
  double tau = 0;
  double rho = 0;
};

struct InterferenceReport {
  std::vector<InterferenceTrial> trials;
  std::vector<RankPairing> ranks;

  Summary accuracy(const std::string& group) const;
  Summary tau(const std::string& pairing) const;
  Summary rho(const std::string& pairing) const;
};

/// Trains on weight_train ∪ alpha_train and ranks on the held-out eval split.
InterferenceReport run_interference_study(const InterferenceOptions& options, const DatasetHandle& data);

}  // namespace bdnas
