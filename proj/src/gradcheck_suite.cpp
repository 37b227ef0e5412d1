#include "bdnas/gradcheck_suite.hpp"

#include <cmath>
#include <functional>

#include "bdnas/ops.hpp"
#include "bdnas/space.hpp"

namespace bdnas {
namespace {

int pick(RandomStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

Tensor random_tensor(RandomStream& rng, const Shape& shape, Real scale = 1.0) {
  std::vector<Real> v(shape.numel());
  for (auto& x : v) x = scale * rng.normal();
  return Tensor::from(shape, std::move(v));
}

std::vector<Real> random_weights(RandomStream& rng, std::size_t n) {
  std::vector<Real> w(n);
  for (auto& x : w) x = rng.uniform(-1, 1);
  return w;
}

std::vector<int> random_labels(RandomStream& rng, std::size_t n, std::size_t classes) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(classes));
  return y;
}

bool near_kink(const Tensor& pre, Real margin) {
  for (Real v : pre.values()) {
    if (std::abs(v) < margin || std::abs(v - 6) < margin) return true;
  }
  return false;
}

void absorb(OpGradReport& report, const GradCheckResult& r) {
  ++report.instances;
  report.finite = report.finite && r.finite;
  if (r.max_rel_error > report.max_rel_error || !r.finite) {
    report.max_rel_error = r.max_rel_error;
    report.worst = r.worst;
  }
}

// Builds one random instance: fills `params` and returns the scalar loss.
using InstanceFn = std::function<std::function<Tensor()>(RandomStream&, ParamSet&)>;

OpGradReport check_op(const std::string& name, const InstanceFn& make, const GradSuiteOptions& o) {
  OpGradReport report;
  report.op = name;
  RandomStream rng(o.seed, "gradcheck/" + name);
  for (int i = 0; i < o.instances_per_op; ++i) {
    ParamSet params;
    auto loss = make(rng, params);
    if (!loss) {
      ++report.rejected;
      --i;
      if (report.rejected > 100 * o.instances_per_op) break;
      continue;
    }
    absorb(report, finite_diff_check(loss, params, {.seed = o.seed + static_cast<std::uint64_t>(i)}));
  }
  return report;
}

}  // namespace

std::vector<OpGradReport> run_gradcheck_suite(const GradSuiteOptions& o) {
  std::vector<OpGradReport> out;
  const Real margin = o.kink_margin;

  out.push_back(check_op("conv2d", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const int n = pick(rng, 1, 2), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
    const int k = 2 * pick(rng, 0, 2) + 1, stride = pick(rng, 1, 2);
    const int h = pick(rng, 3, 6), w = pick(rng, 3, 6);
    Tensor x = random_tensor(rng, Shape{std::size_t(n), std::size_t(cin), std::size_t(h), std::size_t(w)});
    Tensor wt = random_tensor(rng, Shape{std::size_t(cout), std::size_t(cin), std::size_t(k), std::size_t(k)});
    ps.add("x", x);
    ps.add("w", wt);
    const auto probe = conv2d(x, wt, stride, k / 2);
    auto weights = random_weights(rng, probe.numel());
    return [=] { return weighted_sum(conv2d(x, wt, stride, k / 2), weights); };
  }, o));

  out.push_back(check_op("depthwise_conv2d", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const int n = pick(rng, 1, 2), c = pick(rng, 1, 4);
    const int k = 2 * pick(rng, 1, 3) + 1, stride = pick(rng, 1, 2);
    const int h = pick(rng, 3, 7), w = pick(rng, 3, 7);
    Tensor x = random_tensor(rng, Shape{std::size_t(n), std::size_t(c), std::size_t(h), std::size_t(w)});
    Tensor wt = random_tensor(rng, Shape{std::size_t(c), 1, std::size_t(k), std::size_t(k)});
    ps.add("x", x);
    ps.add("w", wt);
    auto weights = random_weights(rng, depthwise_conv2d(x, wt, stride, k / 2).numel());
    return [=] { return weighted_sum(depthwise_conv2d(x, wt, stride, k / 2), weights); };
  }, o));

  out.push_back(check_op("relu6", [margin](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const int n = pick(rng, 1, 3), c = pick(rng, 1, 3), h = pick(rng, 1, 4);
    std::vector<Real> v(static_cast<std::size_t>(n * c * h * h));
    for (auto& x : v) {
      do x = rng.uniform(-2, 8);
      while (std::abs(x) < margin || std::abs(x - 6) < margin);
    }
    Tensor x = Tensor::from(Shape{std::size_t(n), std::size_t(c), std::size_t(h), std::size_t(h)}, std::move(v));
    ps.add("x", x);
    auto weights = random_weights(rng, x.numel());
    return [=] { return weighted_sum(relu6(x), weights); };
  }, o));

  out.push_back(check_op("channel_affine", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 3), c = pick(rng, 1, 4);
    const bool rank4 = rng.below(2) == 1;
    const std::size_t h = pick(rng, 1, 4);
    Tensor x = rank4 ? random_tensor(rng, Shape{n, c, h, h}) : random_tensor(rng, Shape{n, c});
    Tensor s = random_tensor(rng, Shape{c}), b = random_tensor(rng, Shape{c});
    ps.add("x", x);
    ps.add("scale", s);
    ps.add("bias", b);
    auto weights = random_weights(rng, x.numel());
    return [=] { return weighted_sum(channel_affine(x, s, b), weights); };
  }, o));

  out.push_back(check_op("add", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 3), c = pick(rng, 1, 3), h = pick(rng, 1, 4);
    Tensor a = random_tensor(rng, Shape{n, c, h, h}), b = random_tensor(rng, Shape{n, c, h, h});
    ps.add("a", a);
    ps.add("b", b);
    auto weights = random_weights(rng, a.numel());
    return [=] { return weighted_sum(add(a, b), weights); };
  }, o));

  out.push_back(check_op("global_avg_pool", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 3), c = pick(rng, 1, 4), h = pick(rng, 1, 5), w = pick(rng, 1, 5);
    Tensor x = random_tensor(rng, Shape{n, c, h, w});
    ps.add("x", x);
    auto weights = random_weights(rng, n * c);
    return [=] { return weighted_sum(global_avg_pool(x), weights); };
  }, o));

  out.push_back(check_op("linear", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 4), in = pick(rng, 1, 6), outc = pick(rng, 1, 5);
    Tensor x = random_tensor(rng, Shape{n, in}), w = random_tensor(rng, Shape{outc, in}),
           b = random_tensor(rng, Shape{outc});
    ps.add("x", x);
    ps.add("w", w);
    ps.add("b", b);
    auto weights = random_weights(rng, n * outc);
    return [=] { return weighted_sum(linear(x, w, b), weights); };
  }, o));

  out.push_back(check_op("softmax", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 4), c = pick(rng, 2, 7);
    Tensor z = rng.below(2) ? random_tensor(rng, Shape{n, c}, 2.0) : random_tensor(rng, Shape{c}, 2.0);
    ps.add("z", z);
    auto weights = random_weights(rng, z.numel());
    return [=] { return weighted_sum(softmax(z), weights); };
  }, o));

  out.push_back(check_op("cross_entropy", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 5), c = pick(rng, 2, 6);
    std::vector<Real> v(n * c);
    for (auto& x : v) x = rng.uniform(0.1, 1.0);
    Tensor p = Tensor::from(Shape{n, c}, std::move(v));
    ps.add("probs", p);
    auto labels = random_labels(rng, n, c);
    return [=] { return cross_entropy(p, labels); };
  }, o));

  out.push_back(check_op("softmax_cross_entropy", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 5), c = pick(rng, 2, 6);
    Tensor z = random_tensor(rng, Shape{n, c}, 3.0);
    ps.add("logits", z);
    auto labels = random_labels(rng, n, c);
    return [=] { return softmax_cross_entropy(z, labels); };
  }, o));

  out.push_back(check_op("softmax_then_cross_entropy", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 5), c = pick(rng, 2, 6);
    Tensor z = random_tensor(rng, Shape{n, c}, 2.0);
    ps.add("logits", z);
    auto labels = random_labels(rng, n, c);
    return [=] { return cross_entropy(softmax(z), labels); };
  }, o));

  out.push_back(check_op("weighted_sum", [](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const std::size_t n = pick(rng, 1, 12);
    Tensor x = random_tensor(rng, Shape{n});
    ps.add("x", x);
    auto weights = random_weights(rng, n);
    return [=] { return weighted_sum(x, weights); };
  }, o));

  out.push_back(check_op("mbconv_block_ce", [margin](RandomStream& rng, ParamSet& ps) -> std::function<Tensor()> {
    const int cin = pick(rng, 1, 2), expand = 3, k = 2 * pick(rng, 1, 2) + 1;
    const int stride = pick(rng, 1, 2);
    const int cout = rng.below(2) ? cin : pick(rng, 1, 3);
    const std::size_t n = pick(rng, 1, 2), h = pick(rng, 3, 5), classes = pick(rng, 2, 4);
    const auto spec = OperatorSpec::mbconv(k, expand, stride, cin, cout);
    ParamSet block = init_operator_params(spec, rng);
    // Perturb scales and biases so the check covers non-trivial affine values.
    for (auto& e : block.entries()) {
      for (auto& v : e.tensor.mutable_values()) v += 0.3 * rng.normal();
    }
    Tensor x = random_tensor(rng, Shape{n, std::size_t(cin), h, h});
    Tensor fw = random_tensor(rng, Shape{classes, std::size_t(cout)});
    Tensor fb = random_tensor(rng, Shape{classes});
    auto labels = random_labels(rng, n, classes);

    // Reject draws whose ReLU6 inputs sit near a kink, where the one-sided
    // derivatives disagree and central differences are meaningless.
    const Tensor e1 = channel_affine(conv2d(x, block.at("expand.w"), 1, 0), block.at("expand.scale"),
                                     block.at("expand.bias"));
    const Tensor e2 = channel_affine(depthwise_conv2d(relu6(e1), block.at("dw.w"), stride, k / 2),
                                     block.at("dw.scale"), block.at("dw.bias"));
    if (near_kink(e1, margin) || near_kink(e2, margin)) return {};

    ps.add("x", x);
    for (const auto& e : block.entries()) ps.add("block." + e.name, e.tensor);
    ps.add("fc.w", fw);
    ps.add("fc.b", fb);
    return [=] {
      return softmax_cross_entropy(linear(global_avg_pool(apply_operator(spec, block, x)), fw, fb), labels);
    };
  }, o));

  return out;
}

}  // namespace bdnas
