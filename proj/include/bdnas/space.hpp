#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bdnas/optim.hpp"
#include "bdnas/path.hpp"
#include "bdnas/random.hpp"

namespace bdnas {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Identity and MBConv make up the search space proper. Conv (k×k conv,
// affine, ReLU6) only appears in the branch-interference families.
enum class OpKind { Identity, MBConv, Conv };

struct OperatorSpec {
  OpKind kind = OpKind::Identity;
  int kernel = 0;
  int expand = 0;
  int stride = 1;
  int in_channels = 0;
  int out_channels = 0;

  static OperatorSpec identity(int channels);
  static OperatorSpec mbconv(int kernel, int expand, int stride, int in, int out);
  static OperatorSpec conv(int kernel, int stride, int in, int out);

  /// "identity", "mb_k5_e3", "conv_k3".
  std::string name() const;
  int hidden_channels() const { return expand * in_channels; }
  bool has_residual() const {
    return kind == OpKind::MBConv && stride == 1 && in_channels == out_channels;
  }
  void validate() const;

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

/// Parameters for one operator: fan-in scaled uniform conv weights, unit
/// affine scales, zero biases.
ParamSet init_operator_params(const OperatorSpec& spec, RandomStream& rng);
Tensor apply_operator(const OperatorSpec& spec, const ParamSet& params, const Tensor& x);

struct Candidate {
  OperatorSpec spec;
  ParamSet params;
};

/// A layer's mutually exclusive candidates with their importance factors,
/// active mask and training counters.
struct ChoiceBlock {
  std::vector<Candidate> operators;
  Tensor alpha;
  std::vector<bool> active;
  std::vector<std::int64_t> train_count;

  std::size_t size() const { return operators.size(); }
  std::size_t num_active() const;
  std::vector<Real> alpha_values() const;
  /// Throws std::logic_error if the per-operator vectors disagree in length
  /// or no operator is active.
  void check_invariants() const;
};

ChoiceBlock make_choice_block(std::vector<OperatorSpec> specs, RandomStream& init,
                              Real initial_alpha = 0.0);

struct BlockDescriptor {
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  friend bool operator==(const BlockDescriptor&, const BlockDescriptor&) = default;
};

struct SuperNetSpec {
  int in_channels = 3;
  int height = 32;
  int width = 32;
  int stem_channels = 16;
  std::vector<BlockDescriptor> blocks;
  int head_channels = 64;
  int num_classes = 10;

  /// Throws ConfigError on a broken channel chain or impossible geometry.
  void validate() const;
  /// Spatial extent entering each block, plus the extent after the last one.
  std::vector<std::pair<int, int>> block_input_hw() const;

  friend bool operator==(const SuperNetSpec&, const SuperNetSpec&) = default;
};

/// Identity (only when stride is 1 and channels match) followed by MBConv
/// with kernel {3,5,7} × expand {3,6}, in that order.
std::vector<OperatorSpec> candidate_specs(const BlockDescriptor& block);

std::vector<ChoiceBlock> build_search_space(const SuperNetSpec& spec, RandomStream& init);

/// Stem (3×3 conv, affine, ReLU6), L choice blocks, head (1×1 conv, affine,
/// ReLU6, global average pool, linear classifier).
class SuperNet {
 public:
  SuperNet(SuperNetSpec spec, RandomStream init);
  SuperNet(SuperNetSpec spec, std::vector<ChoiceBlock> blocks, RandomStream init);

  const SuperNetSpec& spec() const { return spec_; }
  std::vector<ChoiceBlock>& blocks() { return blocks_; }
  const std::vector<ChoiceBlock>& blocks() const { return blocks_; }
  ParamSet& stem() { return stem_; }
  ParamSet& head() { return head_; }
  const ParamSet& stem() const { return stem_; }
  const ParamSet& head() const { return head_; }

  Tensor stem_forward(const Tensor& x) const;
  Tensor head_forward(const Tensor& features) const;

  /// Every network weight under a stable dotted name (shares storage).
  ParamSet all_params() const;
  /// Toggles requires_grad on every network weight (not on alpha).
  void set_weights_trainable(bool on);

 private:
  void init_stem_head(RandomStream& init);

  SuperNetSpec spec_;
  ParamSet stem_;
  std::vector<ChoiceBlock> blocks_;
  ParamSet head_;
};

/// Output of the gated operator. Throws std::logic_error if the gate is not
/// one-hot or selects an inactive operator.
Tensor forward_choice_block(const ChoiceBlock& block, const Tensor& x, const GateVector& gate);

/// Throws std::logic_error unless the path picks one active operator per block.
void validate_path(const std::vector<ChoiceBlock>& blocks, const PathSample& path);

Tensor forward_supernet(const SuperNet& net, const Tensor& x, const PathSample& path);

}  // namespace bdnas
