#include "bdnas/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bdnas {
namespace {

GateVector checked_gate(const ChoiceBlock& block, std::size_t index) {
  // Every draw is checked so a dropped operator can never leak into a path.
  if (!block.active.at(index)) throw std::logic_error("sampler drew an inactive operator");
  return GateVector::one_hot(block.size(), index);
}

}  // namespace

std::vector<Real> softmax_over_active(std::span<const Real> alpha, const std::vector<bool>& active) {
  if (alpha.size() != active.size()) throw std::logic_error("alpha and mask lengths differ");
  Real max_alpha = -std::numeric_limits<Real>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (active[i]) {
      max_alpha = std::max(max_alpha, alpha[i]);
      any = true;
    }
  }
  if (!any) throw std::logic_error("softmax over an empty active set");
  std::vector<Real> p(alpha.size(), Real{0});
  Real sum = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (active[i]) sum += (p[i] = std::exp(alpha[i] - max_alpha));
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<Real> block_probabilities(const ChoiceBlock& block) {
  return softmax_over_active(block.alpha.values(), block.active);
}

std::size_t sample_categorical(std::span<const Real> p, double u) {
  Real cum = 0;
  std::size_t last = p.size();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    cum += p[i];
    last = i;
    if (u < cum) return i;
  }
  if (last == p.size()) throw std::logic_error("categorical distribution has no mass");
  return last;  // u landed in the rounding gap above the final prefix sum
}

GateVector sample_uniform_active(const ChoiceBlock& block, RandomStream& rng) {
  const std::size_t m_active = block.num_active();
  if (m_active == 0) throw std::logic_error("no active operator to sample");
  auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(m_active));
  k = std::min(k, m_active - 1);
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (block.active[i] && k-- == 0) return checked_gate(block, i);
  }
  throw std::logic_error("unreachable: uniform draw beyond active set");
}

GateVector sample_by_p(const ChoiceBlock& block, RandomStream& rng) {
  const auto p = block_probabilities(block);
  return checked_gate(block, sample_categorical(p, rng.uniform()));
}

PathSample sample_path_uniform(const std::vector<ChoiceBlock>& blocks, RandomStream& rng, Phase phase) {
  PathSample path{{}, phase};
  for (const auto& b : blocks) path.choice.push_back(sample_uniform_active(b, rng).index());
  return path;
}

PathSample sample_path_by_p(const std::vector<ChoiceBlock>& blocks, RandomStream& rng, Phase phase) {
  PathSample path{{}, phase};
  for (const auto& b : blocks) path.choice.push_back(sample_by_p(b, rng).index());
  return path;
}

}  // namespace bdnas
