#pragma once

#include <span>
#include <vector>

#include "bdnas/path.hpp"
#include "bdnas/random.hpp"
#include "bdnas/space.hpp"

namespace bdnas {

/// Softmax of alpha restricted to the active entries (max-subtracted).
/// Inactive entries are exactly 0. Throws std::logic_error when nothing is
/// active.
std::vector<Real> softmax_over_active(std::span<const Real> alpha, const std::vector<bool>& active);

std::vector<Real> block_probabilities(const ChoiceBlock& block);

/// Inverse CDF over the prefix sums of `p` with one uniform `u` in [0, 1).
/// Entries with p == 0 are never returned.
std::size_t sample_categorical(std::span<const Real> p, double u);

/// Uniform over the active operators (probability 1/M' each).
GateVector sample_uniform_active(const ChoiceBlock& block, RandomStream& rng);

/// Proportional to softmax_over_active(alpha).
GateVector sample_by_p(const ChoiceBlock& block, RandomStream& rng);

PathSample sample_path_uniform(const std::vector<ChoiceBlock>& blocks, RandomStream& rng, Phase phase);
PathSample sample_path_by_p(const std::vector<ChoiceBlock>& blocks, RandomStream& rng, Phase phase);

}  // namespace bdnas
