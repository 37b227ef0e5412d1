#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bdnas/tensor.hpp"

namespace bdnas {

struct OptimizerState {
  std::vector<Real> momentum;     // SGD velocity
  std::vector<Real> first;        // Adam m
  std::vector<Real> second;       // Adam v
  std::int64_t steps = 0;         // Adam step count
};

/// Named parameter tensors with their per-tensor optimizer state.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    OptimizerState state;
  };

  /// Registers a tensor (marked as requiring grad). Names must be unique.
  Tensor& add(std::string name, Tensor t);

  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor* find(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void clear_grads();
  void set_requires_grad(bool on);
  std::size_t num_values() const;

 private:
  std::vector<Entry> entries_;
};

struct AdamBetas {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
};

// Both optimizers skip a tensor whose gradient is absent or identically zero,
// so a zero-gradient step leaves values and state untouched.
void sgd_step(ParamSet& params, Real lr, Real momentum);
void adam_step(ParamSet& params, Real lr, AdamBetas betas = {}, Real eps = 1e-8);

}  // namespace bdnas
