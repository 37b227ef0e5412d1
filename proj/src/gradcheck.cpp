#include "bdnas/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bdnas/random.hpp"

namespace bdnas {

GradCheckResult finite_diff_check(const std::function<Tensor()>& loss, ParamSet& params,
                                  const GradCheckOptions& options) {
  GradCheckResult result;
  const Real h = options.eps;

  params.clear_grads();
  Tensor out = loss();
  if (!std::isfinite(out.item())) {
    result.finite = false;
    result.max_rel_error = std::numeric_limits<Real>::infinity();
    return result;
  }
  out.backward();

  RandomStream rng(options.seed, "gradcheck");
  for (auto& entry : params.entries()) {
    Tensor& t = entry.tensor;
    std::vector<Real> analytic(t.numel(), Real{0});
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());

    std::vector<std::size_t> coords(t.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_tensor != 0 && coords.size() > options.max_coords_per_tensor) {
      shuffle_in_place(coords, rng);
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }

    auto values = t.mutable_values();
    for (std::size_t i : coords) {
      const Real saved = values[i];
      auto eval_at = [&](Real delta) {
        values[i] = saved + delta;
        return loss().item();
      };
      const Real fp2 = eval_at(2 * h), fp1 = eval_at(h), fm1 = eval_at(-h), fm2 = eval_at(-2 * h);
      values[i] = saved;
      const Real central = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
      ++result.coordinates;
      if (!std::isfinite(central)) {
        result.finite = false;
        result.max_rel_error = std::numeric_limits<Real>::infinity();
        result.worst = entry.name + "[" + std::to_string(i) + "]";
        continue;
      }
      const Real a = analytic[i];
      const Real err = std::abs(a - central) / (std::abs(a) + std::abs(central) + h);
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = entry.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  params.clear_grads();
  return result;
}

}  // namespace bdnas
