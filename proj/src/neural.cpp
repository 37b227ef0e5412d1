#include "bdnas/neural.hpp"

#include <cmath>
#include <cstring>

#include "bdnas/ops.hpp"

namespace bdnas {
namespace {

// Freezes every network weight for the lifetime of the guard.
class FrozenWeights {
 public:
  explicit FrozenWeights(SuperNet& net) : net_(net) { net_.set_weights_trainable(false); }
  ~FrozenWeights() { net_.set_weights_trainable(true); }
  FrozenWeights(const FrozenWeights&) = delete;
  FrozenWeights& operator=(const FrozenWeights&) = delete;

 private:
  SuperNet& net_;
};

Real dot(std::span<const Real> a, std::span<const Real> b) {
  Real acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

std::uint64_t checksum_params(const ParamSet& params, std::uint64_t h) {
  for (const auto& e : params.entries()) {
    for (Real v : e.tensor.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = (h ^ bits) * 0x100000001b3ULL;
    }
  }
  return h;
}

NeuralSearchModel::NeuralSearchModel(SuperNet& net, const DatasetHandle& data,
                                     const NeuralTrainingOptions& options)
    : net_(net),
      data_(data),
      options_(options),
      weight_batches_(data.weight_train, options.batch_size, RandomStream(options.seed, "data/weight_batches")),
      alpha_batches_(data.alpha_train.empty() ? data.weight_train : data.alpha_train, options.batch_size,
                     RandomStream(options.seed, "data/alpha_batches")) {}

double NeuralSearchModel::train_path(const PathSample& path) {
  const auto idx = weight_batches_.next();
  return train_on_batch(path, make_batch(data_, idx));
}

double NeuralSearchModel::train_on_batch(const PathSample& path, const Batch& batch) {
  Tensor logits = forward_supernet(net_, batch.x, path);
  Tensor loss = softmax_cross_entropy(logits, batch.labels);
  const double ce = loss.item();
  if (!std::isfinite(ce)) throw NumericError("non-finite training loss");
  loss.backward();
  sgd_step(net_.stem(), options_.lr, options_.momentum);
  sgd_step(net_.head(), options_.lr, options_.momentum);
  for (std::size_t l = 0; l < path.choice.size(); ++l) {
    sgd_step(net_.blocks()[l].operators[path.choice[l]].params, options_.lr, options_.momentum);
  }
  net_.stem().clear_grads();
  net_.head().clear_grads();
  for (std::size_t l = 0; l < path.choice.size(); ++l) {
    net_.blocks()[l].operators[path.choice[l]].params.clear_grads();
  }
  return ce;
}

PathFeedback NeuralSearchModel::evaluate_path(const PathSample& path, bool want_upstream) {
  const auto idx = alpha_batches_.next();
  return evaluate_on_batch(path, make_batch(data_, idx), want_upstream);
}

PathFeedback NeuralSearchModel::evaluate_on_batch(const PathSample& path, const Batch& batch,
                                                  bool want_upstream) {
  FrozenWeights frozen(net_);
  PathFeedback fb;
  if (!want_upstream) {
    fb.ce = softmax_cross_entropy(forward_supernet(net_, batch.x, path), batch.labels).item();
    return fb;
  }

  validate_path(net_.blocks(), path);
  const auto& blocks = net_.blocks();
  // The stem output becomes a grad-requiring leaf so that the backward pass
  // reaches every block output while the weights themselves stay out of it.
  Tensor h = net_.stem_forward(batch.x).detach(true);
  std::vector<Tensor> inputs, outputs;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    inputs.push_back(h);
    h = forward_choice_block(blocks[l], h, GateVector::one_hot(blocks[l].size(), path.choice[l]));
    outputs.push_back(h);
  }
  Tensor loss = softmax_cross_entropy(net_.head_forward(h), batch.labels);
  fb.ce = loss.item();
  loss.backward();

  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const auto& block = blocks[l];
    std::vector<Real> up(block.size(), Real{0});
    if (!outputs[l].has_grad()) throw std::logic_error("block output received no gradient");
    const auto dy = outputs[l].grad();
    const Tensor x = inputs[l].detach(false);
    for (std::size_t j = 0; j < block.size(); ++j) {
      if (!block.active[j]) continue;
      if (j == path.choice[l]) {
        up[j] = dot(dy, outputs[l].values());
      } else {
        const auto& op = block.operators[j];
        up[j] = dot(dy, apply_operator(op.spec, op.params, x).values());
      }
    }
    fb.upstream.push_back(std::move(up));
  }
  return fb;
}

std::uint64_t NeuralSearchModel::weights_checksum() const {
  std::uint64_t h = checksum_params(net_.stem());
  for (const auto& b : net_.blocks()) {
    for (const auto& c : b.operators) h = checksum_params(c.params, h);
  }
  return checksum_params(net_.head(), h);
}

namespace {

template <typename Fn>
void for_each_batch(const DatasetHandle& data, std::span<const std::size_t> indices, std::size_t batch_size, Fn&& fn) {
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t end = std::min(indices.size(), start + batch_size);
    fn(make_batch(data, indices.subspan(start, end - start)));
  }
}

}  // namespace

double evaluate_accuracy(const SuperNet& net, const PathSample& path, const DatasetHandle& data,
                         std::span<const std::size_t> indices, std::size_t batch_size) {
  if (indices.empty()) return 0;
  FrozenWeights frozen(const_cast<SuperNet&>(net));
  std::size_t correct = 0;
  for_each_batch(data, indices, batch_size, [&](const Batch& b) {
    Tensor logits = forward_supernet(net, b.x, path);
    const std::size_t classes = logits.shape()[1];
    auto v = logits.values();
    for (std::size_t r = 0; r < b.labels.size(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes; ++c) {
        if (v[r * classes + c] > v[r * classes + best]) best = c;
      }
      if (static_cast<int>(best) == b.labels[r]) ++correct;
    }
  });
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double evaluate_loss(const SuperNet& net, const PathSample& path, const DatasetHandle& data,
                     std::span<const std::size_t> indices, std::size_t batch_size) {
  if (indices.empty()) return 0;
  FrozenWeights frozen(const_cast<SuperNet&>(net));
  double total = 0;
  for_each_batch(data, indices, batch_size, [&](const Batch& b) {
    total += softmax_cross_entropy(forward_supernet(net, b.x, path), b.labels).item() *
             static_cast<double>(b.labels.size());
  });
  return total / static_cast<double>(indices.size());
}

double cosine_lr(double lr, std::size_t step, std::size_t total) {
  if (total == 0) return lr;
  return lr * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step) / static_cast<double>(total)));
}

double train_standalone(const SuperNetSpec& spec, const std::vector<OperatorSpec>& architecture,
                        const DatasetHandle& data, const StandaloneOptions& options) {
  if (architecture.size() != spec.blocks.size()) throw ConfigError("architecture length does not match the space");
  RandomStream init(options.seed, "standalone/init");
  std::vector<ChoiceBlock> blocks;
  for (std::size_t l = 0; l < architecture.size(); ++l) {
    RandomStream block_rng = init.split("block" + std::to_string(l));
    blocks.push_back(make_choice_block({architecture[l]}, block_rng));
  }
  SuperNet net(spec, std::move(blocks), init);

  std::vector<std::size_t> train = data.weight_train;
  train.insert(train.end(), data.alpha_train.begin(), data.alpha_train.end());
  DatasetHandle view = data;  // cheap enough at desk scale; keeps the model's contract
  view.weight_train = train;
  view.alpha_train.clear();
  NeuralSearchModel model(net, view, {options.batch_size, options.lr, options.momentum, options.seed});
  const PathSample path{std::vector<std::size_t>(architecture.size(), 0), Phase::Network};
  const std::size_t total =
      std::max<std::size_t>(1, train.size() / options.batch_size) * static_cast<std::size_t>(options.epochs);
  for (std::size_t s = 0; s < total; ++s) {
    if (options.cosine_decay) model.set_learning_rate(cosine_lr(options.lr, s, total));
    model.train_path(path);
  }
  return evaluate_accuracy(net, path, data, data.eval);
}

}  // namespace bdnas
