#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdnas/gradcheck.hpp"

namespace bdnas {

struct OpGradReport {
  std::string op;
  int instances = 0;
  int rejected = 0;  // draws discarded for landing too close to a ReLU6 kink
  Real max_rel_error = 0;
  std::string worst;
  bool finite = true;

  bool passed(Real tolerance) const { return finite && instances > 0 && max_rel_error < tolerance; }
};

struct GradSuiteOptions {
  int instances_per_op = 20;
  std::uint64_t seed = 0;
  /// Minimum distance of every ReLU6 input from 0 and 6.
  Real kink_margin = 2e-3;
};

/// Finite-difference checks of every differentiable op on random shapes, plus
/// an MBConv block feeding a classifier and cross-entropy.
std::vector<OpGradReport> run_gradcheck_suite(const GradSuiteOptions& options = {});

}  // namespace bdnas
