#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bdnas/cost.hpp"
#include "bdnas/optim.hpp"
#include "bdnas/path.hpp"
#include "bdnas/random.hpp"
#include "bdnas/space.hpp"

namespace bdnas {

/// Raised when a loss or an architecture parameter stops being finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Strategy {
  BalancedDrop,    // uniform Phase-1 paths, alpha by gradient, selective drop
  ProxylessLike,   // Phase-1 paths sampled by p (frequency follows alpha)
  OneshotUniform,  // uniform training for the whole budget, then alpha; no drops
};
std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// How Phase 2 obtains dL/dg for each block.
enum class UpstreamMode {
  Exact,       // every active operator evaluated against the frozen backward signal
  SampledPath  // score-function estimate from the sampled path's loss only
};
std::string to_string(UpstreamMode m);
UpstreamMode upstream_mode_from_string(const std::string& name);

struct SearchConfig {
  int s_max = 10;
  int phase1_steps = 50;
  int phase2_steps = 10;
  double th_p = 0.05;
  double beta = 0.0;
  double lr_w = 0.01;
  double momentum_w = 0.9;
  double lr_alpha = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::BalancedDrop;
  CostKind cost_kind = CostKind::Flops;
  UpstreamMode upstream = UpstreamMode::Exact;

  /// Throws ConfigError. `max_block_size` is the largest M in the space;
  /// th_p must lie in (0, 1/M).
  void validate(std::size_t max_block_size) const;
};

/// Feedback of one frozen-weight evaluation of a path.
struct PathFeedback {
  double ce = 0;
  /// upstream[l][j] = dL/dg_{l,j}; zero for inactive j. Empty when not requested.
  std::vector<std::vector<Real>> upstream;
};

/// The weight-sharing network side of a search: owns the choice blocks, the
/// weights, their optimizer, and the two data streams.
class SearchModel {
 public:
  virtual ~SearchModel() = default;
  virtual std::vector<ChoiceBlock>& blocks() = 0;
  const std::vector<ChoiceBlock>& blocks() const { return const_cast<SearchModel*>(this)->blocks(); }
  /// One weight update of `path` on the next weight-training batch; returns
  /// the batch cross-entropy before the update.
  virtual double train_path(const PathSample& path) = 0;
  /// Cross-entropy of `path` on the next alpha-training batch with weights
  /// frozen, plus per-operator dL/dg when `want_upstream`.
  virtual PathFeedback evaluate_path(const PathSample& path, bool want_upstream) = 0;
  /// Hash of every network weight bit pattern (alpha excluded).
  virtual std::uint64_t weights_checksum() const = 0;
};

/// dL/dalpha_m = Σ_{j active} upstream_j · p_j · (δ_mj − p_m) for active m,
/// 0 for inactive m. Evaluated in the centred form p_m·(u_m − Σ_j p_j u_j),
/// which returns exact zeros when all active upstream values are equal.
std::vector<Real> alpha_grad(std::span<const Real> p, std::span<const Real> upstream,
                             const std::vector<bool>& active);
std::vector<Real> alpha_grad(const ChoiceBlock& block, std::span<const Real> upstream);

/// Σ_l Σ_{m active} p_{l,m} · cost_{l,m}.
double latency_term(const std::vector<ChoiceBlock>& blocks, const CostTable& cost);

/// ce + beta · latency_term.
double joint_loss(double ce, const std::vector<ChoiceBlock>& blocks, const CostTable& cost, double beta);

/// Adam on every block's alpha; dropped entries stay at the value they had
/// when dropped.
class AlphaOptimizer {
 public:
  AlphaOptimizer(std::vector<ChoiceBlock>& blocks, double lr, AdamBetas betas, double eps);
  void step(std::vector<ChoiceBlock>& blocks, const std::vector<std::vector<Real>>& grads);

 private:
  ParamSet params_;
  double lr_;
  AdamBetas betas_;
  double eps_;
};

struct StepResult {
  PathSample path;
  double ce = 0;
  double latency = 0;
  double joint = 0;
};

/// Samples a path (uniform over active for BalancedDrop/OneshotUniform, by p
/// for ProxylessLike), trains it once and increments its train counts.
StepResult phase1_train_step(SearchModel& model, RandomStream& path_rng, Strategy strategy,
                             const CostTable& cost, double beta);

struct Phase2Options {
  double beta = 0;
  UpstreamMode upstream = UpstreamMode::Exact;
  /// Running loss baseline for the SampledPath estimator (updated in place).
  double* baseline = nullptr;
};

/// Samples a path by p, evaluates it with frozen weights and takes one Adam
/// step on alpha along the CE estimate plus beta times the exact latency-term
/// gradient. Train counts are not touched.
StepResult phase2_alpha_step(SearchModel& model, const CostTable& cost, RandomStream& arch_rng,
                             AlphaOptimizer& optimizer, const Phase2Options& options);

/// Deactivates every active operator with p < th_p except each block's
/// argmax. Returns the (block, operator) pairs dropped.
std::vector<std::pair<std::size_t, std::size_t>> drop_paths(std::vector<ChoiceBlock>& blocks, double th_p);

/// argmax over active alpha, lowest index on ties.
std::size_t argmax_active(const ChoiceBlock& block);

struct ArchitectureResult {
  std::vector<std::size_t> choice;
  std::vector<OperatorSpec> operators;
  double flops = 0;
  double latency_proxy = 0;
  std::vector<std::vector<Real>> alpha;
};

/// Per-block argmax over active alpha; totals include stem and head.
ArchitectureResult select_architecture(const std::vector<ChoiceBlock>& blocks, const CostTable& flops,
                                       const CostTable* latency = nullptr);

struct RunLogRecord {
  int t = 0;
  int phase = 1;
  int inner_step = 0;
  std::vector<std::size_t> path;
  double ce = 0;
  double latency_term = 0;
  double joint = 0;
  std::vector<std::vector<Real>> alpha;
  std::vector<std::vector<bool>> active;
  std::vector<std::vector<std::int64_t>> train_count;
};

struct SearchState {
  int t = 0;
  /// [block][snapshot][operator], one snapshot after every Phase-2 step.
  std::vector<std::vector<std::vector<Real>>> alpha_trajectory;
  std::vector<std::vector<std::int64_t>> train_count;
  /// Outer step at which each operator was dropped.
  std::vector<std::vector<std::optional<int>>> drop_step;
  std::vector<double> loss_history;
};

struct SearchOutcome {
  ArchitectureResult result;
  SearchState state;
  std::vector<RunLogRecord> log;
};

struct SearchCosts {
  const CostTable* objective = nullptr;  // feeds the latency term
  const CostTable* flops = nullptr;      // for the exported totals
  const CostTable* latency = nullptr;    // optional
};

/// Alternates Phase 1 and Phase 2 for s_max outer steps, dropping paths after
/// each Phase 2, then selects per-block argmax. `on_record` sees every log
/// record as it is produced.
SearchOutcome run_search(const SearchConfig& config, SearchModel& model, const SearchCosts& costs,
                         const std::function<void(const RunLogRecord&)>& on_record = {});

/// Checks the drop contract on a finished log: active sets never grow or
/// empty, and a dropped operator is never sampled or trained again. Returns
/// an empty string when the log is clean, otherwise the first violation.
std::string check_drop_semantics(const std::vector<RunLogRecord>& log);

}  // namespace bdnas
