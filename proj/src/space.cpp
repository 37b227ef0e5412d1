#include "bdnas/space.hpp"

#include <algorithm>
#include <cmath>

#include "bdnas/ops.hpp"

namespace bdnas {

GateVector GateVector::one_hot(std::size_t size, std::size_t index) {
  if (index >= size) throw std::logic_error("gate index out of range");
  GateVector gv{std::vector<Real>(size, Real{0})};
  gv.g[index] = Real{1};
  return gv;
}

std::size_t GateVector::index() const {
  std::size_t ones = 0, at = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == Real{1}) {
      ++ones;
      at = i;
    } else if (g[i] != Real{0}) {
      throw std::logic_error("gate vector entries must be 0 or 1");
    }
  }
  if (ones != 1) throw std::logic_error("gate vector must have exactly one 1");
  return at;
}

OperatorSpec OperatorSpec::identity(int channels) {
  return {OpKind::Identity, 0, 0, 1, channels, channels};
}

OperatorSpec OperatorSpec::mbconv(int kernel, int expand, int stride, int in, int out) {
  return {OpKind::MBConv, kernel, expand, stride, in, out};
}

OperatorSpec OperatorSpec::conv(int kernel, int stride, int in, int out) {
  return {OpKind::Conv, kernel, 0, stride, in, out};
}

std::string OperatorSpec::name() const {
  switch (kind) {
    case OpKind::Identity:
      return "identity";
    case OpKind::MBConv:
      return "mb_k" + std::to_string(kernel) + "_e" + std::to_string(expand);
    case OpKind::Conv:
      return "conv_k" + std::to_string(kernel);
  }
  return "?";
}

void OperatorSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) throw ConfigError(name() + ": channels must be >= 1");
  if (stride != 1 && stride != 2) throw ConfigError(name() + ": stride must be 1 or 2");
  switch (kind) {
    case OpKind::Identity:
      if (stride != 1 || in_channels != out_channels) {
        throw ConfigError("identity requires stride 1 and in_channels == out_channels");
      }
      break;
    case OpKind::MBConv:
      if (kernel != 3 && kernel != 5 && kernel != 7) throw ConfigError(name() + ": kernel must be 3, 5 or 7");
      if (expand != 3 && expand != 6) throw ConfigError(name() + ": expand must be 3 or 6");
      break;
    case OpKind::Conv:
      if (kernel < 1 || kernel % 2 == 0) throw ConfigError(name() + ": kernel must be odd");
      break;
  }
}

namespace {

Tensor uniform_weights(Shape shape, std::size_t fan_in, RandomStream& rng) {
  const Real bound = std::sqrt(Real{6} / static_cast<Real>(fan_in));
  std::vector<Real> v(shape.numel());
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v));
}

void add_affine(ParamSet& ps, const std::string& prefix, std::size_t channels) {
  ps.add(prefix + ".scale", Tensor::full(Shape{channels}, Real{1}));
  ps.add(prefix + ".bias", Tensor::zeros(Shape{channels}));
}

Tensor conv_affine(const ParamSet& ps, const std::string& prefix, const Tensor& x, int stride,
                   int padding, bool depthwise) {
  const Tensor& w = ps.at(prefix + ".w");
  Tensor y = depthwise ? depthwise_conv2d(x, w, stride, padding) : conv2d(x, w, stride, padding);
  return channel_affine(y, ps.at(prefix + ".scale"), ps.at(prefix + ".bias"));
}

}  // namespace

ParamSet init_operator_params(const OperatorSpec& spec, RandomStream& rng) {
  spec.validate();
  ParamSet ps;
  const auto in = static_cast<std::size_t>(spec.in_channels);
  const auto out = static_cast<std::size_t>(spec.out_channels);
  const auto k = static_cast<std::size_t>(spec.kernel);
  switch (spec.kind) {
    case OpKind::Identity:
      break;
    case OpKind::MBConv: {
      const auto hidden = static_cast<std::size_t>(spec.hidden_channels());
      ps.add("expand.w", uniform_weights(Shape{hidden, in, 1, 1}, in, rng));
      add_affine(ps, "expand", hidden);
      ps.add("dw.w", uniform_weights(Shape{hidden, 1, k, k}, k * k, rng));
      add_affine(ps, "dw", hidden);
      ps.add("project.w", uniform_weights(Shape{out, hidden, 1, 1}, hidden, rng));
      add_affine(ps, "project", out);
      break;
    }
    case OpKind::Conv:
      ps.add("conv.w", uniform_weights(Shape{out, in, k, k}, in * k * k, rng));
      add_affine(ps, "conv", out);
      break;
  }
  return ps;
}

Tensor apply_operator(const OperatorSpec& spec, const ParamSet& params, const Tensor& x) {
  switch (spec.kind) {
    case OpKind::Identity:
      return x;
    case OpKind::MBConv: {
      Tensor h = relu6(conv_affine(params, "expand", x, 1, 0, false));
      h = relu6(conv_affine(params, "dw", h, spec.stride, spec.kernel / 2, true));
      Tensor y = conv_affine(params, "project", h, 1, 0, false);
      return spec.has_residual() ? add(y, x) : y;
    }
    case OpKind::Conv:
      return relu6(conv_affine(params, "conv", x, spec.stride, spec.kernel / 2, false));
  }
  throw std::logic_error("unknown operator kind");
}

std::size_t ChoiceBlock::num_active() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

std::vector<Real> ChoiceBlock::alpha_values() const {
  auto v = alpha.values();
  return {v.begin(), v.end()};
}

void ChoiceBlock::check_invariants() const {
  const std::size_t m = operators.size();
  if (alpha.numel() != m || active.size() != m || train_count.size() != m) {
    throw std::logic_error("choice block vectors disagree in length");
  }
  if (num_active() == 0) throw std::logic_error("choice block has no active operator");
}

ChoiceBlock make_choice_block(std::vector<OperatorSpec> specs, RandomStream& init,
                              Real initial_alpha) {
  if (specs.empty()) throw ConfigError("choice block needs at least one operator");
  ChoiceBlock block;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (specs[i] == specs[j]) throw ConfigError("duplicate operator " + specs[i].name());
    }
    if (specs[i].in_channels != specs[0].in_channels ||
        specs[i].out_channels != specs[0].out_channels || specs[i].stride != specs[0].stride) {
      throw ConfigError("operators of one block must share channels and stride");
    }
    RandomStream op_rng = init.split(specs[i].name());
    ParamSet params = init_operator_params(specs[i], op_rng);
    block.operators.push_back({specs[i], std::move(params)});
  }
  const std::size_t m = block.operators.size();
  block.alpha = Tensor::full(Shape{m}, initial_alpha);
  block.active.assign(m, true);
  block.train_count.assign(m, 0);
  return block;
}

void SuperNetSpec::validate() const {
  if (in_channels < 1 || height < 1 || width < 1) throw ConfigError("input shape must be positive");
  if (stem_channels < 1 || head_channels < 1) throw ConfigError("stem and head widths must be >= 1");
  if (num_classes < 2) throw ConfigError("need at least 2 classes");
  if (blocks.empty()) throw ConfigError("search space needs at least one block");
  int channels = stem_channels;
  int h = height, w = width;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.in_channels != channels) {
      throw ConfigError("block " + std::to_string(i) + " expects " + std::to_string(b.in_channels) +
                        " input channels but receives " + std::to_string(channels));
    }
    if (b.out_channels < 1) throw ConfigError("block " + std::to_string(i) + " has no output channels");
    if (b.stride != 1 && b.stride != 2) {
      throw ConfigError("block " + std::to_string(i) + " stride must be 1 or 2");
    }
    h = (h - 1) / b.stride + 1;
    w = (w - 1) / b.stride + 1;
    channels = b.out_channels;
  }
}

std::vector<std::pair<int, int>> SuperNetSpec::block_input_hw() const {
  std::vector<std::pair<int, int>> hw;
  int h = height, w = width;
  hw.emplace_back(h, w);
  for (const auto& b : blocks) {
    // "same" padding (k/2) with odd k gives floor((H - 1) / s) + 1 for every kernel.
    h = (h - 1) / b.stride + 1;
    w = (w - 1) / b.stride + 1;
    hw.emplace_back(h, w);
  }
  return hw;
}

std::vector<OperatorSpec> candidate_specs(const BlockDescriptor& b) {
  std::vector<OperatorSpec> specs;
  if (b.stride == 1 && b.in_channels == b.out_channels) {
    specs.push_back(OperatorSpec::identity(b.in_channels));
  }
  for (int k : {3, 5, 7}) {
    for (int t : {3, 6}) specs.push_back(OperatorSpec::mbconv(k, t, b.stride, b.in_channels, b.out_channels));
  }
  return specs;
}

std::vector<ChoiceBlock> build_search_space(const SuperNetSpec& spec, RandomStream& init) {
  spec.validate();
  std::vector<ChoiceBlock> blocks;
  for (std::size_t l = 0; l < spec.blocks.size(); ++l) {
    RandomStream block_rng = init.split("block" + std::to_string(l));
    blocks.push_back(make_choice_block(candidate_specs(spec.blocks[l]), block_rng));
  }
  return blocks;
}

SuperNet::SuperNet(SuperNetSpec spec, RandomStream init) : spec_(std::move(spec)) {
  spec_.validate();
  RandomStream blocks_rng = init.split("space");
  blocks_ = build_search_space(spec_, blocks_rng);
  init_stem_head(init);
}

SuperNet::SuperNet(SuperNetSpec spec, std::vector<ChoiceBlock> blocks, RandomStream init)
    : spec_(std::move(spec)), blocks_(std::move(blocks)) {
  spec_.validate();
  if (blocks_.size() != spec_.blocks.size()) throw ConfigError("block count does not match spec");
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    blocks_[l].check_invariants();
    for (const auto& c : blocks_[l].operators) {
      const auto& d = spec_.blocks[l];
      if (c.spec.in_channels != d.in_channels || c.spec.out_channels != d.out_channels ||
          c.spec.stride != d.stride) {
        throw ConfigError("operator " + c.spec.name() + " does not fit block " + std::to_string(l));
      }
    }
  }
  init_stem_head(init);
}

void SuperNet::init_stem_head(RandomStream& init) {
  RandomStream rng = init.split("stem_head");
  const auto cin = static_cast<std::size_t>(spec_.in_channels);
  const auto stem = static_cast<std::size_t>(spec_.stem_channels);
  stem_.add("conv.w", uniform_weights(Shape{stem, cin, 3, 3}, cin * 9, rng));
  add_affine(stem_, "conv", stem);

  const auto last = static_cast<std::size_t>(spec_.blocks.back().out_channels);
  const auto head = static_cast<std::size_t>(spec_.head_channels);
  const auto classes = static_cast<std::size_t>(spec_.num_classes);
  head_.add("conv.w", uniform_weights(Shape{head, last, 1, 1}, last, rng));
  add_affine(head_, "conv", head);
  const Real bound = 1 / std::sqrt(static_cast<Real>(head));
  std::vector<Real> fc(classes * head);
  for (auto& v : fc) v = rng.uniform(-bound, bound);
  head_.add("fc.w", Tensor::from(Shape{classes, head}, std::move(fc)));
  head_.add("fc.b", Tensor::zeros(Shape{classes}));
}

Tensor SuperNet::stem_forward(const Tensor& x) const {
  if (x.shape().rank() != 4 || x.shape()[1] != static_cast<std::size_t>(spec_.in_channels) ||
      x.shape()[2] != static_cast<std::size_t>(spec_.height) ||
      x.shape()[3] != static_cast<std::size_t>(spec_.width)) {
    throw ShapeError("network input " + x.shape().str() + " does not match the space's input shape");
  }
  return relu6(conv_affine(stem_, "conv", x, 1, 1, false));
}

Tensor SuperNet::head_forward(const Tensor& features) const {
  Tensor h = relu6(conv_affine(head_, "conv", features, 1, 0, false));
  return linear(global_avg_pool(h), head_.at("fc.w"), head_.at("fc.b"));
}

ParamSet SuperNet::all_params() const {
  ParamSet out;
  auto copy_into = [&out](const std::string& prefix, const ParamSet& ps) {
    for (const auto& e : ps.entries()) out.entries().push_back({prefix + e.name, e.tensor, e.state});
  };
  copy_into("stem.", stem_);
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    for (const auto& c : blocks_[l].operators) {
      copy_into("block" + std::to_string(l) + "." + c.spec.name() + ".", c.params);
    }
  }
  copy_into("head.", head_);
  return out;
}

void SuperNet::set_weights_trainable(bool on) {
  stem_.set_requires_grad(on);
  head_.set_requires_grad(on);
  for (auto& b : blocks_) {
    for (auto& c : b.operators) c.params.set_requires_grad(on);
  }
}

Tensor forward_choice_block(const ChoiceBlock& block, const Tensor& x, const GateVector& gate) {
  if (gate.g.size() != block.size()) throw std::logic_error("gate length does not match block size");
  const std::size_t m = gate.index();
  if (!block.active[m]) {
    throw std::logic_error("gate selects inactive operator " + block.operators[m].spec.name());
  }
  const auto& op = block.operators[m];
  return apply_operator(op.spec, op.params, x);
}

void validate_path(const std::vector<ChoiceBlock>& blocks, const PathSample& path) {
  if (path.choice.size() != blocks.size()) {
    throw std::logic_error("path has " + std::to_string(path.choice.size()) + " entries for " +
                           std::to_string(blocks.size()) + " blocks");
  }
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const std::size_t m = path.choice[l];
    if (m >= blocks[l].size() || !blocks[l].active[m]) {
      throw std::logic_error("path selects an invalid or inactive operator in block " + std::to_string(l));
    }
  }
}

Tensor forward_supernet(const SuperNet& net, const Tensor& x, const PathSample& path) {
  validate_path(net.blocks(), path);
  Tensor h = net.stem_forward(x);
  for (std::size_t l = 0; l < net.blocks().size(); ++l) {
    const auto& block = net.blocks()[l];
    h = forward_choice_block(block, h, GateVector::one_hot(block.size(), path.choice[l]));
  }
  return net.head_forward(h);
}

}  // namespace bdnas
