#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bdnas/optim.hpp"

namespace bdnas {

struct GradCheckResult {
  Real max_rel_error = 0;
  std::size_t coordinates = 0;
  bool finite = true;
  std::string worst;  // "<param>[<index>]" of the largest error

  bool passed(Real tolerance) const { return finite && max_rel_error < tolerance; }
};

struct GradCheckOptions {
  Real eps = 1e-4;
  /// 0 checks every coordinate; otherwise a seeded sample per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

/// Compares reverse-mode gradients of the scalar `loss` with respect to every
/// tensor in `params` against central differences.
///
/// Uses the fourth-order central stencil
///   (-f(w+2h) + 8 f(w+h) - 8 f(w-h) + f(w-2h)) / 12h
/// and reports max |analytic - central| / (|analytic| + |central| + eps).
/// A non-finite loss anywhere marks the result as failed.
GradCheckResult finite_diff_check(const std::function<Tensor()>& loss, ParamSet& params,
                                  const GradCheckOptions& options = {});

}  // namespace bdnas
