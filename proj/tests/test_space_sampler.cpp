#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "bdnas/cost.hpp"
#include "bdnas/engine.hpp"
#include "bdnas/ops.hpp"
#include "bdnas/random.hpp"
#include "bdnas/sampler.hpp"
#include "bdnas/space.hpp"

using namespace bdnas;

namespace {

SuperNetSpec tiny_spec() {
  SuperNetSpec s;
  s.in_channels = 2;
  s.height = 6;
  s.width = 6;
  s.stem_channels = 4;
  s.blocks = {{4, 4, 1}, {4, 6, 2}};
  s.head_channels = 8;
  s.num_classes = 3;
  return s;
}

Tensor random_input(Shape shape, std::uint64_t seed) {
  RandomStream rng(seed, "input");
  std::vector<Real> v(shape.numel());
  for (auto& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v));
}

// MACs by walking every output element and every kernel tap (padding included).
double brute_force_macs(const OperatorSpec& op, int h, int w) {
  auto conv_macs = [](int in_h, int in_w, int k, int stride, int cin_per_out, int cout) {
    const int pad = k / 2;
    double macs = 0;
    for (int o = 0; o < cout; ++o)
      for (int i = 0; i <= in_h + 2 * pad - k; i += stride)
        for (int j = 0; j <= in_w + 2 * pad - k; j += stride)
          for (int c = 0; c < cin_per_out; ++c)
            for (int a = 0; a < k; ++a)
              for (int b = 0; b < k; ++b) macs += 1;
    return macs;
  };
  const int hidden = op.expand * op.in_channels;
  const int oh = (h + 2 * (op.kernel / 2) - op.kernel) / op.stride + 1;
  const int ow = (w + 2 * (op.kernel / 2) - op.kernel) / op.stride + 1;
  return conv_macs(h, w, 1, 1, op.in_channels, hidden) + conv_macs(h, w, op.kernel, op.stride, 1, hidden) +
         conv_macs(oh, ow, 1, 1, hidden, op.out_channels);
}

}  // namespace

TEST(Random, SameSeedAndLabelReplay) {
  RandomStream a(42, "x"), b(42, "x"), c(42, "y"), d(43, "x");
  bool differs_label = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    differs_label |= va != c.next_u64();
    differs_seed |= va != d.next_u64();
  }
  EXPECT_TRUE(differs_label);
  EXPECT_TRUE(differs_seed);
}

TEST(Random, UniformAndBelowRanges) {
  RandomStream r(1, "r");
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}

TEST(Random, NormalMoments) {
  RandomStream r(2, "n");
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Space, StrideOneMatchedBlockHasSevenOperatorsWithIdentity) {
  auto specs = candidate_specs({16, 16, 1});
  ASSERT_EQ(specs.size(), 7u);
  EXPECT_EQ(specs[0].kind, OpKind::Identity);
  for (std::size_t i = 1; i < specs.size(); ++i) EXPECT_EQ(specs[i].kind, OpKind::MBConv);
}

TEST(Space, StrideTwoOrChannelChangeHasNoIdentity) {
  for (BlockDescriptor b : {BlockDescriptor{16, 16, 2}, BlockDescriptor{16, 24, 1}}) {
    auto specs = candidate_specs(b);
    EXPECT_EQ(specs.size(), 6u);
    for (const auto& s : specs) EXPECT_NE(s.kind, OpKind::Identity);
  }
}

TEST(Space, OperatorSpecValidation) {
  EXPECT_THROW(OperatorSpec::mbconv(4, 3, 1, 8, 8).validate(), ConfigError);
  EXPECT_THROW(OperatorSpec::mbconv(3, 4, 1, 8, 8).validate(), ConfigError);
  OperatorSpec bad_identity = OperatorSpec::identity(8);
  bad_identity.stride = 2;
  EXPECT_THROW(bad_identity.validate(), ConfigError);
  EXPECT_NO_THROW(OperatorSpec::mbconv(7, 6, 2, 8, 16).validate());
}

TEST(Space, BrokenChannelChainRejected) {
  auto s = tiny_spec();
  s.blocks = {{4, 4, 1}, {5, 6, 1}};
  EXPECT_THROW(s.validate(), ConfigError);
  s.blocks.clear();
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Space, FreshBlockHasConstantAlphaAndUniformP) {
  RandomStream init(0, "init");
  auto blocks = build_search_space(tiny_spec(), init);
  for (const auto& b : blocks) {
    b.check_invariants();
    for (auto a : b.alpha_values()) EXPECT_EQ(a, b.alpha_values()[0]);
    for (auto p : block_probabilities(b)) EXPECT_NEAR(p, 1.0 / static_cast<double>(b.size()), 1e-15);
    for (auto c : b.train_count) EXPECT_EQ(c, 0);
  }
}

TEST(Space, IdentityGateReturnsInput) {
  RandomStream init(1, "init");
  auto block = make_choice_block(candidate_specs({4, 4, 1}), init);
  auto x = random_input({2, 4, 5, 5}, 3);
  auto y = forward_choice_block(block, x, GateVector::one_hot(block.size(), 0));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.values()[i], x.values()[i]);
}

TEST(Space, GateMatchesDirectOperatorCall) {
  RandomStream init(2, "init");
  auto block = make_choice_block(candidate_specs({4, 4, 1}), init);
  auto x = random_input({1, 4, 5, 5}, 4);
  for (std::size_t m = 1; m < block.size(); ++m) {
    auto gated = forward_choice_block(block, x, GateVector::one_hot(block.size(), m));
    auto direct = apply_operator(block.operators[m].spec, block.operators[m].params, x);
    ASSERT_EQ(gated.shape(), direct.shape());
    for (std::size_t i = 0; i < direct.numel(); ++i) EXPECT_EQ(gated.values()[i], direct.values()[i]);
  }
}

TEST(Space, GateOnInactiveOperatorIsLogicError) {
  RandomStream init(3, "init");
  auto block = make_choice_block(candidate_specs({4, 4, 1}), init);
  block.active[2] = false;
  auto x = random_input({1, 4, 3, 3}, 5);
  EXPECT_THROW(forward_choice_block(block, x, GateVector::one_hot(block.size(), 2)), std::logic_error);
  GateVector two_hot{std::vector<Real>(block.size(), 0.0)};
  two_hot.g[0] = two_hot.g[1] = 1.0;
  EXPECT_THROW(forward_choice_block(block, x, two_hot), std::logic_error);
}

TEST(Space, AllIdentityPathEqualsStemThenHead) {
  SuperNetSpec s = tiny_spec();
  s.blocks = {{4, 4, 1}, {4, 4, 1}};
  SuperNet net(s, RandomStream(4, "init"));
  auto x = random_input({2, 2, 6, 6}, 6);
  auto logits = forward_supernet(net, x, PathSample{{0, 0}, Phase::Network});
  auto direct = net.head_forward(net.stem_forward(x));
  for (std::size_t i = 0; i < logits.numel(); ++i) EXPECT_EQ(logits.values()[i], direct.values()[i]);
}

TEST(Space, FixedSeedFixedPathIsReproducible) {
  SuperNet a(tiny_spec(), RandomStream(5, "init")), b(tiny_spec(), RandomStream(5, "init"));
  auto x = random_input({2, 2, 6, 6}, 7);
  PathSample path{{3, 4}, Phase::Network};
  auto la = forward_supernet(a, x, path), lb = forward_supernet(b, x, path);
  for (std::size_t i = 0; i < la.numel(); ++i) EXPECT_EQ(la.values()[i], lb.values()[i]);
}

TEST(Space, MalformedPathIsLogicError) {
  SuperNet net(tiny_spec(), RandomStream(6, "init"));
  EXPECT_THROW(validate_path(net.blocks(), PathSample{{0}, Phase::Network}), std::logic_error);
  EXPECT_THROW(validate_path(net.blocks(), PathSample{{0, 9}, Phase::Network}), std::logic_error);
}

TEST(Space, PathCountIsProductOfBlockSizes) {
  SuperNetSpec s = tiny_spec();
  s.blocks = {{4, 4, 1}, {4, 4, 1}, {4, 4, 1}, {4, 4, 1}};
  RandomStream init(7, "init");
  auto blocks = build_search_space(s, init);
  std::size_t paths = 1;
  for (const auto& b : blocks) paths *= b.size();
  EXPECT_EQ(paths, 2401u);
}

TEST(Cost, IdentityIsFree) {
  EXPECT_EQ(flops_of(OperatorSpec::identity(8), {8, 8}), 0.0);
  LatencyTable t;
  EXPECT_EQ(latency_proxy_of(OperatorSpec::identity(8), {8, 8}, &t, 0, false), 0.0);
}

TEST(Cost, MBConvMatchesBruteForceOracle) {
  const auto t3 = OperatorSpec::mbconv(3, 3, 1, 8, 8);
  const auto t6 = OperatorSpec::mbconv(3, 6, 1, 8, 8);
  EXPECT_EQ(flops_of(t3, {8, 8}), brute_force_macs(t3, 8, 8));
  EXPECT_EQ(flops_of(t6, {8, 8}), brute_force_macs(t6, 8, 8));
  const auto s3 = mbconv_stage_flops(t3, {8, 8}), s6 = mbconv_stage_flops(t6, {8, 8});
  EXPECT_EQ(s6.expand, 2 * s3.expand);
  EXPECT_EQ(s6.depthwise, 2 * s3.depthwise);
  for (int k : {3, 5, 7})
    for (int e : {3, 6})
      for (int stride : {1, 2}) {
        const auto op = OperatorSpec::mbconv(k, e, stride, 8, 16);
        EXPECT_EQ(flops_of(op, {7, 9}), brute_force_macs(op, 7, 9));
      }
}

TEST(Cost, StrictlyIncreasingInKernelAndExpand) {
  for (int e : {3, 6})
    EXPECT_LT(flops_of(OperatorSpec::mbconv(3, e, 1, 8, 8), {8, 8}),
              flops_of(OperatorSpec::mbconv(5, e, 1, 8, 8), {8, 8}));
  for (int k : {3, 5, 7})
    EXPECT_LT(flops_of(OperatorSpec::mbconv(k, 3, 1, 8, 8), {8, 8}),
              flops_of(OperatorSpec::mbconv(k, 6, 1, 8, 8), {8, 8}));
  EXPECT_LT(flops_of(OperatorSpec::mbconv(5, 3, 1, 8, 8), {8, 8}),
            flops_of(OperatorSpec::mbconv(7, 3, 1, 8, 8), {8, 8}));
}

TEST(Cost, MissingLatencyEntryWithoutMeasurementIsConfigError) {
  LatencyTable t;
  EXPECT_THROW(latency_proxy_of(OperatorSpec::mbconv(3, 3, 1, 8, 8), {8, 8}, &t, 0, false), ConfigError);
  t.set(0, "mb_k3_e3", 12.5);
  EXPECT_EQ(latency_proxy_of(OperatorSpec::mbconv(3, 3, 1, 8, 8), {8, 8}, &t, 0, false), 12.5);
}

TEST(Cost, SelectedFlopsEqualPathSumPlusStemHead) {
  RandomStream init(8, "init");
  auto s = tiny_spec();
  auto blocks = build_search_space(s, init);
  auto table = build_flops_table(s, blocks);
  RandomStream rng(9, "paths");
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& b : blocks)
      for (std::size_t m = 0; m < b.size(); ++m) b.alpha.mutable_values()[m] = rng.normal();
    auto r = select_architecture(blocks, table);
    const auto hw = s.block_input_hw();
    double expected = stem_flops(s) + head_flops(s);
    for (std::size_t l = 0; l < blocks.size(); ++l) expected += flops_of(blocks[l].operators[r.choice[l]].spec, hw[l]);
    EXPECT_DOUBLE_EQ(r.flops, expected);
  }
}

TEST(Sampler, SoftmaxOverActiveExamples) {
  std::vector<Real> c4{1.7, 1.7, 1.7, 1.7};
  for (auto p : softmax_over_active(c4, {true, true, true, true})) EXPECT_NEAR(p, 0.25, 1e-15);
  std::vector<Real> z2{0, 0};
  auto p = softmax_over_active(z2, {true, false});
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
  std::vector<Real> ln2{std::log(2.0), 0.0};
  auto q = softmax_over_active(ln2, {true, true});
  EXPECT_NEAR(q[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(q[1], 1.0 / 3.0, 1e-15);
  EXPECT_THROW(softmax_over_active(z2, {false, false}), std::logic_error);
}

TEST(Sampler, ShiftInvariance) {
  RandomStream rng(10, "alpha");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Real> a(7);
    std::vector<bool> act(7);
    for (std::size_t i = 0; i < 7; ++i) {
      a[i] = rng.normal() * 3;
      act[i] = rng.uniform() < 0.7;
    }
    act[rng.below(7)] = true;
    const double c = rng.uniform(-50, 50);
    std::vector<Real> b = a;
    for (auto& v : b) v += c;
    auto pa = softmax_over_active(a, act), pb = softmax_over_active(b, act);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(pa[i], pb[i], 1e-12);
  }
}

TEST(Sampler, CategoricalNeverReturnsZeroProbability) {
  std::vector<Real> p{0.0, 0.5, 0.0, 0.5, 0.0};
  for (double u : {0.0, 0.25, 0.4999999, 0.5, 0.75, 0.999999999}) {
    const auto i = sample_categorical(p, u);
    EXPECT_TRUE(i == 1 || i == 3);
  }
}

TEST(Sampler, SingleActiveOperatorAlwaysChosen) {
  RandomStream init(11, "init");
  auto block = make_choice_block(candidate_specs({4, 4, 1}), init);
  for (std::size_t m = 0; m < block.size(); ++m) block.active[m] = m == 4;
  RandomStream rng(12, "s");
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_uniform_active(block, rng).index(), 4u);
    EXPECT_EQ(sample_by_p(block, rng).index(), 4u);
  }
}

TEST(Sampler, InactiveOperatorsAreNeverDrawn) {
  RandomStream init(13, "init");
  auto block = make_choice_block(candidate_specs({4, 4, 1}), init);
  block.active = {true, false, true, false, true, true, false};
  block.alpha.mutable_values()[1] = 100.0;
  RandomStream rng(14, "s");
  for (int i = 0; i < 20000; ++i) {
    EXPECT_TRUE(block.active[sample_uniform_active(block, rng).index()]);
    EXPECT_TRUE(block.active[sample_by_p(block, rng).index()]);
  }
}

TEST(Sampler, ByPMatchesTargetWithinFourSigma) {
  RandomStream init(15, "init");
  auto block = make_choice_block({OperatorSpec::identity(4), OperatorSpec::mbconv(3, 3, 1, 4, 4)}, init);
  block.alpha.mutable_values()[0] = std::log(2.0);
  RandomStream rng(16, "s");
  const int n = 30000;
  int first = 0;
  for (int i = 0; i < n; ++i) first += sample_by_p(block, rng).index() == 0;
  const double p = 2.0 / 3.0, sigma = std::sqrt(n * p * (1 - p));
  EXPECT_LT(std::abs(first - n * p), 4 * sigma);
}

TEST(Sampler, ShiftedAlphaDrawsIdenticalSamplesFromSharedStream) {
  RandomStream init(17, "init");
  auto a = make_choice_block(candidate_specs({4, 4, 1}), init);
  for (std::size_t m = 0; m < a.size(); ++m) a.alpha.mutable_values()[m] = 0.3 * static_cast<double>(m) - 1.0;
  RandomStream init2(17, "init");
  auto b = make_choice_block(candidate_specs({4, 4, 1}), init2);
  for (std::size_t m = 0; m < b.size(); ++m) b.alpha.mutable_values()[m] = a.alpha.values()[m] + 11.0;
  RandomStream ra(18, "s"), rb(18, "s");
  for (int i = 0; i < 5000; ++i) EXPECT_EQ(sample_by_p(a, ra).index(), sample_by_p(b, rb).index());
}

TEST(Sampler, PathSamplersPickActiveOperatorPerBlock) {
  RandomStream init(19, "init");
  auto blocks = build_search_space(tiny_spec(), init);
  blocks[0].active[0] = false;
  RandomStream rng(20, "p");
  for (int i = 0; i < 500; ++i) {
    auto u = sample_path_uniform(blocks, rng, Phase::Network);
    auto p = sample_path_by_p(blocks, rng, Phase::Architecture);
    EXPECT_NO_THROW(validate_path(blocks, u));
    EXPECT_NO_THROW(validate_path(blocks, p));
    EXPECT_EQ(p.phase, Phase::Architecture);
  }
}
