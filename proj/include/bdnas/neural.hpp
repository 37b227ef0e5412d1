#pragma once

#include <cstdint>
#include <span>

#include "bdnas/data.hpp"
#include "bdnas/engine.hpp"
#include "bdnas/space.hpp"

namespace bdnas {

struct NeuralTrainingOptions {
  std::size_t batch_size = 32;
  double lr = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

/// SearchModel backed by a real weight-sharing SuperNet. Phase 1 draws from
/// the weight-training split, Phase 2 from the alpha-training split.
class NeuralSearchModel final : public SearchModel {
 public:
  NeuralSearchModel(SuperNet& net, const DatasetHandle& data, const NeuralTrainingOptions& options);

  std::vector<ChoiceBlock>& blocks() override { return net_.blocks(); }
  double train_path(const PathSample& path) override;
  PathFeedback evaluate_path(const PathSample& path, bool want_upstream) override;
  std::uint64_t weights_checksum() const override;

  /// One SGD step of `path` on a given batch. Only stem, head and the
  /// operators on the path receive gradients, so nothing else moves.
  double train_on_batch(const PathSample& path, const Batch& batch);
  PathFeedback evaluate_on_batch(const PathSample& path, const Batch& batch, bool want_upstream);

  SuperNet& net() { return net_; }
  void set_learning_rate(double lr) { options_.lr = lr; }

 private:
  SuperNet& net_;
  const DatasetHandle& data_;
  NeuralTrainingOptions options_;
  BatchCursor weight_batches_;
  BatchCursor alpha_batches_;
};

std::uint64_t checksum_params(const ParamSet& params, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Fraction of correctly classified examples of `indices` under `path`.
double evaluate_accuracy(const SuperNet& net, const PathSample& path, const DatasetHandle& data,
                         std::span<const std::size_t> indices, std::size_t batch_size = 64);

/// Mean cross-entropy of `path` over `indices` (weights untouched).
double evaluate_loss(const SuperNet& net, const PathSample& path, const DatasetHandle& data,
                     std::span<const std::size_t> indices, std::size_t batch_size = 64);

struct StandaloneOptions {
  int epochs = 5;
  std::size_t batch_size = 32;
  double lr = 0.01;
  double momentum = 0.9;
  /// Anneal lr along a half cosine to 0 over the whole run.
  bool cosine_decay = true;
  std::uint64_t seed = 0;
};

/// lr · (1 + cos(π · step / total)) / 2.
double cosine_lr(double lr, std::size_t step, std::size_t total);

/// Builds a network whose blocks hold exactly the given operators, trains it
/// from scratch on weight_train ∪ alpha_train and returns eval accuracy.
double train_standalone(const SuperNetSpec& spec, const std::vector<OperatorSpec>& architecture,
                        const DatasetHandle& data, const StandaloneOptions& options);

}  // namespace bdnas
