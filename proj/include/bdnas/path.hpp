#pragma once

#include <cstddef>
#include <vector>

#include "bdnas/tensor.hpp"

namespace bdnas {

/// One-hot selector over a block's operators.
struct GateVector {
  std::vector<Real> g;

  static GateVector one_hot(std::size_t size, std::size_t index);
  /// Position of the single 1. Throws std::logic_error when not one-hot.
  std::size_t index() const;
};

enum class Phase { Network, Architecture };

/// One operator index per choice block.
struct PathSample {
  std::vector<std::size_t> choice;
  Phase phase = Phase::Network;

  friend bool operator==(const PathSample&, const PathSample&) = default;
};

}  // namespace bdnas
