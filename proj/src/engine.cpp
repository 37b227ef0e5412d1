#include "bdnas/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "bdnas/sampler.hpp"

namespace bdnas {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::BalancedDrop:
      return "balanced_drop";
    case Strategy::ProxylessLike:
      return "proxyless_like";
    case Strategy::OneshotUniform:
      return "oneshot_uniform";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "balanced_drop") return Strategy::BalancedDrop;
  if (name == "proxyless_like") return Strategy::ProxylessLike;
  if (name == "oneshot_uniform") return Strategy::OneshotUniform;
  throw ConfigError("unknown strategy '" + name +
                    "' (expected balanced_drop, proxyless_like or oneshot_uniform)");
}

std::string to_string(UpstreamMode m) { return m == UpstreamMode::Exact ? "exact" : "sampled"; }

UpstreamMode upstream_mode_from_string(const std::string& name) {
  if (name == "exact") return UpstreamMode::Exact;
  if (name == "sampled") return UpstreamMode::SampledPath;
  throw ConfigError("unknown upstream mode '" + name + "' (expected exact or sampled)");
}

void SearchConfig::validate(std::size_t max_block_size) const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (s_max < 1) fail("s_max must be >= 1");
  if (phase1_steps < 0 || phase2_steps < 0) fail("phase step counts must be >= 0");
  if (max_block_size == 0) fail("empty search space");
  if (!(th_p > 0) || !(th_p < 1.0 / static_cast<double>(max_block_size))) {
    fail("th_p must lie in (0, 1/M) = (0, " + std::to_string(1.0 / static_cast<double>(max_block_size)) + ")");
  }
  if (!(beta >= 0)) fail("beta must be >= 0");
  if (!(lr_w >= 0) || !(lr_alpha >= 0)) fail("learning rates must be >= 0");
  if (!(momentum_w >= 0 && momentum_w < 1)) fail("momentum_w must lie in [0, 1)");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1)) {
    fail("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) fail("adam_eps must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
}

std::vector<Real> alpha_grad(std::span<const Real> p, std::span<const Real> upstream,
                             const std::vector<bool>& active) {
  const std::size_t m = p.size();
  if (upstream.size() != m || active.size() != m) throw std::logic_error("alpha_grad length mismatch");
  std::vector<Real> grad(m, Real{0});
  std::size_t ref = m;
  for (std::size_t j = 0; j < m; ++j) {
    if (active[j]) {
      ref = j;
      break;
    }
  }
  if (ref == m) return grad;
  // Weighted mean of upstream, taken relative to one active entry so equal
  // inputs cancel exactly.
  Real centred_mean = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (active[j]) centred_mean += p[j] * (upstream[j] - upstream[ref]);
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (active[k]) grad[k] = p[k] * ((upstream[k] - upstream[ref]) - centred_mean);
  }
  return grad;
}

std::vector<Real> alpha_grad(const ChoiceBlock& block, std::span<const Real> upstream) {
  const auto p = block_probabilities(block);
  return alpha_grad(p, upstream, block.active);
}

double latency_term(const std::vector<ChoiceBlock>& blocks, const CostTable& cost) {
  if (cost.per_block.size() != blocks.size()) throw std::logic_error("cost table does not match blocks");
  double total = 0;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const auto p = block_probabilities(blocks[l]);
    for (std::size_t m = 0; m < p.size(); ++m) {
      if (blocks[l].active[m]) total += p[m] * cost.at(l, m);
    }
  }
  return total;
}

double joint_loss(double ce, const std::vector<ChoiceBlock>& blocks, const CostTable& cost, double beta) {
  if (beta == 0) return ce;
  return ce + beta * latency_term(blocks, cost);
}

AlphaOptimizer::AlphaOptimizer(std::vector<ChoiceBlock>& blocks, double lr, AdamBetas betas, double eps)
    : lr_(lr), betas_(betas), eps_(eps) {
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    params_.add("alpha" + std::to_string(l), blocks[l].alpha);
  }
}

void AlphaOptimizer::step(std::vector<ChoiceBlock>& blocks, const std::vector<std::vector<Real>>& grads) {
  if (grads.size() != blocks.size() || params_.size() != blocks.size()) {
    throw std::logic_error("alpha gradient does not match blocks");
  }
  std::vector<std::vector<Real>> before;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    before.push_back(blocks[l].alpha_values());
    params_.entries()[l].tensor.set_grad(grads[l]);
  }
  adam_step(params_, lr_, betas_, eps_);
  params_.clear_grads();
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    auto a = blocks[l].alpha.mutable_values();
    for (std::size_t m = 0; m < a.size(); ++m) {
      if (!blocks[l].active[m]) a[m] = before[l][m];
      if (!std::isfinite(a[m])) {
        throw NumericError("alpha of block " + std::to_string(l) + " operator " +
                           std::to_string(m) + " became non-finite");
      }
    }
  }
}

StepResult phase1_train_step(SearchModel& model, RandomStream& path_rng, Strategy strategy,
                             const CostTable& cost, double beta) {
  auto& blocks = model.blocks();
  StepResult r;
  r.path = strategy == Strategy::ProxylessLike ? sample_path_by_p(blocks, path_rng, Phase::Network)
                                               : sample_path_uniform(blocks, path_rng, Phase::Network);
  r.ce = model.train_path(r.path);
  if (!std::isfinite(r.ce)) throw NumericError("non-finite Phase-1 loss");
  for (std::size_t l = 0; l < blocks.size(); ++l) ++blocks[l].train_count[r.path.choice[l]];
  r.latency = latency_term(blocks, cost);
  r.joint = r.ce + beta * r.latency;
  return r;
}

StepResult phase2_alpha_step(SearchModel& model, const CostTable& cost, RandomStream& arch_rng,
                             AlphaOptimizer& optimizer, const Phase2Options& options) {
  auto& blocks = model.blocks();
  StepResult r;
  r.path = sample_path_by_p(blocks, arch_rng, Phase::Architecture);
  const bool exact = options.upstream == UpstreamMode::Exact;
  PathFeedback fb = model.evaluate_path(r.path, exact);
  if (!std::isfinite(fb.ce)) throw NumericError("non-finite Phase-2 loss");
  r.ce = fb.ce;
  r.latency = latency_term(blocks, cost);
  r.joint = r.ce + options.beta * r.latency;

  double advantage = fb.ce;
  if (!exact && options.baseline) {
    advantage = fb.ce - *options.baseline;
    *options.baseline = 0.9 * *options.baseline + 0.1 * fb.ce;
  }

  std::vector<std::vector<Real>> grads;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const auto& block = blocks[l];
    const auto p = block_probabilities(block);
    std::vector<Real> upstream;
    if (exact) {
      upstream = fb.upstream.at(l);
    } else {
      // Score-function form: u_s = A / p_s on the sampled operator only,
      // which turns the estimator into A · (δ_ms − p_m).
      upstream.assign(block.size(), Real{0});
      const std::size_t s = r.path.choice[l];
      upstream[s] = advantage / p[s];
    }
    auto g = alpha_grad(p, upstream, block.active);
    if (options.beta != 0) {
      const auto lat = alpha_grad(p, cost.per_block.at(l), block.active);
      for (std::size_t m = 0; m < g.size(); ++m) g[m] += options.beta * lat[m];
    }
    grads.push_back(std::move(g));
  }
  optimizer.step(blocks, grads);
  return r;
}

std::size_t argmax_active(const ChoiceBlock& block) {
  const auto a = block.alpha.values();
  std::size_t best = block.size();
  for (std::size_t m = 0; m < block.size(); ++m) {
    if (block.active[m] && (best == block.size() || a[m] > a[best])) best = m;
  }
  if (best == block.size()) throw std::logic_error("argmax over an empty active set");
  return best;
}

std::vector<std::pair<std::size_t, std::size_t>> drop_paths(std::vector<ChoiceBlock>& blocks, double th_p) {
  std::vector<std::pair<std::size_t, std::size_t>> dropped;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    auto& block = blocks[l];
    const auto p = block_probabilities(block);
    const std::size_t keep = argmax_active(block);
    for (std::size_t m = 0; m < block.size(); ++m) {
      if (block.active[m] && m != keep && p[m] < th_p) {
        block.active[m] = false;
        dropped.emplace_back(l, m);
      }
    }
    block.check_invariants();
  }
  return dropped;
}

ArchitectureResult select_architecture(const std::vector<ChoiceBlock>& blocks, const CostTable& flops,
                                       const CostTable* latency) {
  ArchitectureResult r;
  for (const auto& b : blocks) {
    const std::size_t m = argmax_active(b);
    r.choice.push_back(m);
    r.operators.push_back(b.operators[m].spec);
    r.alpha.push_back(b.alpha_values());
  }
  r.flops = flops.path_total(r.choice);
  if (latency) r.latency_proxy = latency->path_total(r.choice);
  return r;
}

namespace {

RunLogRecord make_record(int t, int phase, int inner, const StepResult& step,
                         const std::vector<ChoiceBlock>& blocks) {
  RunLogRecord rec;
  rec.t = t;
  rec.phase = phase;
  rec.inner_step = inner;
  rec.path = step.path.choice;
  rec.ce = step.ce;
  rec.latency_term = step.latency;
  rec.joint = step.joint;
  for (const auto& b : blocks) {
    rec.alpha.push_back(b.alpha_values());
    rec.active.push_back(b.active);
    rec.train_count.push_back(b.train_count);
  }
  return rec;
}

std::uint64_t alpha_checksum(const std::vector<ChoiceBlock>& blocks) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& b : blocks) {
    for (Real v : b.alpha.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = (h ^ bits) * 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace

SearchOutcome run_search(const SearchConfig& config, SearchModel& model, const SearchCosts& costs,
                         const std::function<void(const RunLogRecord&)>& on_record) {
  auto& blocks = model.blocks();
  std::size_t max_m = 0;
  for (const auto& b : blocks) {
    b.check_invariants();
    max_m = std::max(max_m, b.size());
  }
  config.validate(max_m);
  if (!costs.objective || !costs.flops) throw std::invalid_argument("run_search needs cost tables");

  RandomStream net_rng(config.seed, "search/network");
  RandomStream arch_rng(config.seed, "search/arch");
  AlphaOptimizer optimizer(blocks, config.lr_alpha, {config.adam_beta1, config.adam_beta2}, config.adam_eps);
  double baseline = 0;
  Phase2Options p2{config.beta, config.upstream, &baseline};

  SearchOutcome out;
  auto& state = out.state;
  state.alpha_trajectory.resize(blocks.size());
  state.drop_step.resize(blocks.size());
  for (std::size_t l = 0; l < blocks.size(); ++l) state.drop_step[l].assign(blocks[l].size(), std::nullopt);

  auto emit = [&](RunLogRecord rec) {
    if (on_record) on_record(rec);
    out.log.push_back(std::move(rec));
  };

  auto run_phase1 = [&](int t, int steps) {
    for (int i = 0; i < steps; ++i) {
      const auto alpha_before = alpha_checksum(blocks);
      auto step = phase1_train_step(model, net_rng, config.strategy, *costs.objective, config.beta);
      if (alpha_checksum(blocks) != alpha_before) throw std::logic_error("Phase 1 modified alpha");
      state.loss_history.push_back(step.ce);
      emit(make_record(t, 1, i, step, blocks));
    }
  };
  auto run_phase2 = [&](int t, int steps) {
    for (int i = 0; i < steps; ++i) {
      const auto weights_before = model.weights_checksum();
      auto step = phase2_alpha_step(model, *costs.objective, arch_rng, optimizer, p2);
      if (model.weights_checksum() != weights_before) throw std::logic_error("Phase 2 modified network weights");
      state.loss_history.push_back(step.joint);
      for (std::size_t l = 0; l < blocks.size(); ++l) state.alpha_trajectory[l].push_back(blocks[l].alpha_values());
      emit(make_record(t, 2, i, step, blocks));
    }
  };

  if (config.strategy == Strategy::OneshotUniform) {
    for (int t = 0; t < config.s_max; ++t) {
      state.t = t;
      run_phase1(t, config.phase1_steps);
    }
    state.t = config.s_max;
    run_phase2(config.s_max, config.s_max * config.phase2_steps);
  } else {
    for (int t = 0; t < config.s_max; ++t) {
      state.t = t;
      run_phase1(t, config.phase1_steps);
      run_phase2(t, config.phase2_steps);
      for (auto [l, m] : drop_paths(blocks, config.th_p)) state.drop_step[l][m] = t;
    }
    state.t = config.s_max;
  }

  for (const auto& b : blocks) state.train_count.push_back(b.train_count);
  out.result = select_architecture(blocks, *costs.flops, costs.latency);
  return out;
}

std::string check_drop_semantics(const std::vector<RunLogRecord>& log) {
  if (log.empty()) return {};
  const std::size_t nb = log.front().active.size();
  std::vector<std::vector<bool>> prev_active = log.front().active;
  // Train count at the moment each operator was first seen inactive.
  std::vector<std::vector<std::optional<std::int64_t>>> frozen(nb);
  for (std::size_t l = 0; l < nb; ++l) frozen[l].assign(prev_active[l].size(), std::nullopt);

  for (std::size_t r = 0; r < log.size(); ++r) {
    const auto& rec = log[r];
    std::ostringstream where;
    where << "record " << r << " (t=" << rec.t << ", phase " << rec.phase << ", step " << rec.inner_step << ")";
    for (std::size_t l = 0; l < nb; ++l) {
      const auto& act = rec.active[l];
      const auto n_active = std::count(act.begin(), act.end(), true);
      if (n_active == 0) return where.str() + ": block " + std::to_string(l) + " has no active operator";
      const std::size_t s = rec.path.at(l);
      if (!act.at(s)) return where.str() + ": sampled dropped operator " + std::to_string(s) + " in block " + std::to_string(l);
      for (std::size_t m = 0; m < act.size(); ++m) {
        if (act[m] && !prev_active[l][m]) {
          return where.str() + ": operator " + std::to_string(m) + " of block " + std::to_string(l) + " reactivated";
        }
        if (!act[m]) {
          if (!frozen[l][m]) frozen[l][m] = rec.train_count[l][m];
          if (rec.train_count[l][m] != *frozen[l][m]) {
            return where.str() + ": train_count of dropped operator " + std::to_string(m) + " in block " +
                   std::to_string(l) + " changed";
          }
        }
      }
    }
    prev_active = rec.active;
  }
  return {};
}

}  // namespace bdnas
