#include "bdnas/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace bdnas {
namespace {

bool has_nonzero_grad(const Tensor& t) {
  if (!t.has_grad()) return false;
  auto g = t.grad();
  return std::any_of(g.begin(), g.end(), [](Real v) { return v != Real{0}; });
}

}  // namespace

Tensor& ParamSet::add(std::string name, Tensor t) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  t.set_requires_grad(true);
  entries_.push_back({std::move(name), std::move(t), {}});
  return entries_.back().tensor;
}

const Tensor* ParamSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

const Tensor& ParamSet::at(std::string_view name) const {
  if (const Tensor* t = find(name)) return *t;
  throw std::out_of_range("no parameter named " + std::string(name));
}

Tensor& ParamSet::at(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).at(name));
}

void ParamSet::clear_grads() {
  for (auto& e : entries_) e.tensor.clear_grad();
}

void ParamSet::set_requires_grad(bool on) {
  for (auto& e : entries_) e.tensor.set_requires_grad(on);
}

std::size_t ParamSet::num_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void sgd_step(ParamSet& params, Real lr, Real momentum) {
  for (auto& e : params.entries()) {
    if (!has_nonzero_grad(e.tensor)) continue;
    auto w = e.tensor.mutable_values();
    auto g = e.tensor.grad();
    if (momentum != Real{0}) {
      auto& v = e.state.momentum;
      if (v.size() != w.size()) v.assign(w.size(), Real{0});
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = momentum * v[i] + g[i];
        w[i] -= lr * v[i];
      }
    } else {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
    }
  }
}

void adam_step(ParamSet& params, Real lr, AdamBetas betas, Real eps) {
  for (auto& e : params.entries()) {
    if (!has_nonzero_grad(e.tensor)) continue;
    auto w = e.tensor.mutable_values();
    auto g = e.tensor.grad();
    auto& st = e.state;
    if (st.first.size() != w.size()) {
      st.first.assign(w.size(), Real{0});
      st.second.assign(w.size(), Real{0});
    }
    ++st.steps;
    const Real c1 = 1 - std::pow(betas.beta1, static_cast<Real>(st.steps));
    const Real c2 = 1 - std::pow(betas.beta2, static_cast<Real>(st.steps));
    for (std::size_t i = 0; i < w.size(); ++i) {
      st.first[i] = betas.beta1 * st.first[i] + (1 - betas.beta1) * g[i];
      st.second[i] = betas.beta2 * st.second[i] + (1 - betas.beta2) * g[i] * g[i];
      const Real mhat = st.first[i] / c1;
      const Real vhat = st.second[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace bdnas
