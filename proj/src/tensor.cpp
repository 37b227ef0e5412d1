#include "bdnas/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace bdnas {

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() != 1 && dims_.size() != 2 && dims_.size() != 4) {
    throw ShapeError("tensor rank must be 1, 2 or 4, got " + std::to_string(dims_.size()));
  }
  for (auto d : dims_) {
    if (d == 0) throw ShapeError("tensor extents must be >= 1, got " + str());
  }
}

std::size_t Shape::numel() const {
  if (dims_.empty()) return 0;
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << ',';
    os << dims_[i];
  }
  os << ')';
  return os.str();
}

namespace detail {

std::span<Real> Node::grad_buffer() {
  if (!has_grad) {
    grad.assign(value.size(), Real{0});
    has_grad = true;
  }
  return grad;
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Real{0}, requires_grad);
}

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
  std::vector<Real> v(shape.numel(), value);
  return from(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<Real> values, bool requires_grad) {
  if (values.size() != shape.numel()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     shape.str());
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return from(Shape{1}, {value}, requires_grad);
}

detail::Node& Tensor::node() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }

std::span<const Real> Tensor::values() const { return node().value; }

std::span<Real> Tensor::mutable_values() { return node().value; }

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
  return node().value[0];
}

bool Tensor::requires_grad() const { return node().requires_grad; }

void Tensor::set_requires_grad(bool on) { node().requires_grad = on; }

bool Tensor::has_grad() const { return node().has_grad; }

std::span<const Real> Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("gradient requested but absent");
  return node().grad;
}

std::span<Real> Tensor::mutable_grad() { return node().grad_buffer(); }

void Tensor::set_grad(std::span<const Real> g) {
  if (g.size() != numel()) throw ShapeError("gradient length does not match " + shape().str());
  auto& n = node();
  n.grad.assign(g.begin(), g.end());
  n.has_grad = true;
}

void Tensor::clear_grad() {
  auto& n = node();
  n.grad.clear();
  n.grad.shrink_to_fit();
  n.has_grad = false;
}

Tensor Tensor::detach(bool requires_grad) const {
  return from(shape(), node().value, requires_grad);
}

Tensor Tensor::make_result(Shape shape, std::vector<Real> values, std::vector<Tensor> inputs,
                           BackwardFn backward) {
  Tensor out = from(std::move(shape), std::move(values), false);
  bool any = std::any_of(inputs.begin(), inputs.end(),
                         [](const Tensor& t) { return t.requires_grad(); });
  if (any) {
    auto& n = out.node();
    n.requires_grad = true;
    n.inputs.reserve(inputs.size());
    for (auto& t : inputs) n.inputs.push_back(t.node_);
    n.backward = std::move(backward);
  }
  return out;
}

void Tensor::backward() const {
  auto& root = node();
  if (root.value.size() != 1) throw ShapeError("backward() needs a single-element tensor");
  if (!root.requires_grad) return;

  // Iterative post-order DFS; reversed it is a valid topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{&root, 0}};
  seen.insert(&root);
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      detail::Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  root.grad_buffer()[0] += Real{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward && n->has_grad) n->backward(*n);
  }
}

}  // namespace bdnas
