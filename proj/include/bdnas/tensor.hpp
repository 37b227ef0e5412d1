#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdnas {

/// Scalar type of every tensor. Gradient checks are calibrated for double.
using Real = double;

/// Raised for any rank, extent or channel mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered list of extents. Ranks 1, 2 and 4 are the only ones the network
/// needs: scalars/vectors, (batch, features) and (batch, channels, h, w).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t i) const { return dims_.at(i); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t numel() const;
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs that require grad.
  std::function<void(Node&)> backward;

  std::span<Real> grad_buffer();
};

}  // namespace detail

/// Handle to a node of the computation graph. Copies share storage, so a
/// parameter tensor held by a ParamSet and by a network is the same object.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const { return shape().numel(); }

  std::span<const Real> values() const;
  std::span<Real> mutable_values();
  Real item() const;

  bool requires_grad() const;
  void set_requires_grad(bool on);

  /// Gradients are absent until backward writes one, and absent again after
  /// clear_grad(). Optimizers skip tensors whose gradient is absent.
  bool has_grad() const;
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  void set_grad(std::span<const Real> g);
  void clear_grad();

  /// New leaf holding a copy of the values, cut from the graph.
  Tensor detach(bool requires_grad = false) const;

  /// Reverse-mode sweep from a single-element tensor, seeded with 1.
  void backward() const;

  // Graph construction hook for operations.
  using BackwardFn = std::function<void(detail::Node&)>;
  static Tensor make_result(Shape shape, std::vector<Real> values,
                            std::vector<Tensor> inputs, BackwardFn backward);

  detail::Node& node() const;
  bool same_as(const Tensor& other) const { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

}  // namespace bdnas
