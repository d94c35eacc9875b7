#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "airseg/errors.hpp"

namespace airseg {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int e : shape) {
    require(e > 0, "tensor extent must be positive, got ", e);
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

// One node of the reverse-mode differentiation graph. Non-leaf nodes keep
// handles to their parents plus a closure that scatters this node's gradient
// into theirs.
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;  // allocated on first accumulation
  bool requires_grad = false;

  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(const TensorNode&)> backward_fn;

  std::size_t numel() const { return values.size(); }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), T(0));
  }

  void zero_grad() {
    if (!grad.empty()) grad.assign(grad.size(), T(0));
  }
};

// Value-semantic handle onto a graph node. Copies alias the same storage,
// which is what parameter stores and op graphs want.
template <typename T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), T(0), requires_grad);
  }

  static Tensor filled(Shape shape, T value, bool requires_grad = false) {
    auto node = std::make_shared<TensorNode<T>>();
    std::size_t n = shape_numel(shape);
    node->shape = std::move(shape);
    node->values.assign(n, value);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor from_values(Shape shape, std::vector<T> values,
                            bool requires_grad = false) {
    std::size_t n = shape_numel(shape);
    require(n == values.size(), "value count ", values.size(),
            " does not match shape ", shape_str(shape));
    auto node = std::make_shared<TensorNode<T>>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from_values({1}, {value}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int extent(int axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->values.size(); }
  bool is_scalar() const { return numel() == 1; }

  std::vector<T>& values() { return node_->values; }
  const std::vector<T>& values() const { return node_->values; }
  T* data() { return node_->values.data(); }
  const T* data() const { return node_->values.data(); }

  T value() const {
    require(is_scalar(), "value() needs a scalar tensor, shape is ",
            shape_str(shape()));
    return node_->values[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  // Gradient of the most recent backward pass; zeros if none ran yet.
  std::vector<T>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<T>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }

  void zero_grad() { node_->zero_grad(); }

  std::shared_ptr<TensorNode<T>> node() const { return node_; }

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  explicit Tensor(std::shared_ptr<TensorNode<T>> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

namespace detail {

// Post-order collection of the subgraph feeding `root`, iterative so deep
// chains cannot overflow the call stack.
template <typename T>
std::vector<TensorNode<T>*> topo_order(TensorNode<T>* root) {
  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> seen;
  struct Frame {
    TensorNode<T>* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  seen.insert(root);
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_parent < top.node->parents.size()) {
      TensorNode<T>* p = top.node->parents[top.next_parent++].get();
      if (seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(top.node);
      stack.pop_back();
    }
  }
  return order;  // parents before children; reverse for backprop
}

}  // namespace detail

// Reverse accumulation from a scalar root. Interior-node gradients are
// scratch space for the pass; leaf gradients add onto whatever is already
// stored, so call zero_grad on leaves between passes.
template <typename T>
void backward(const Tensor<T>& root) {
  require(root.is_scalar(), "backward root must be scalar, shape is ",
          shape_str(root.shape()));
  TensorNode<T>* r = root.node().get();
  auto order = detail::topo_order(r);
  for (TensorNode<T>* node : order)
    if (!node->parents.empty()) {
      node->ensure_grad();
      node->zero_grad();
    }
  r->ensure_grad();
  r->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* node = *it;
    if (node->backward_fn && node->requires_grad) node->backward_fn(*node);
  }
}

}  // namespace airseg
