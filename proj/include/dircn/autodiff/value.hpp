#pragma once

// Reverse-mode differentiation over dense float64 arrays.
//
// A DiffValue is a shared handle to a graph node holding the forward value,
// a gradient accumulator of the same shape, and the parents plus backward
// closure that produced it. Leaves (parameters, inputs) have no parents.
// Calling backward() on a scalar result runs one pass over the recorded
// graph; leaf gradients accumulate across passes, intermediate gradients are
// overwritten by each pass.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dircn/tensor.hpp"

namespace dircn::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Tensor value;
  std::vector<double> grad;
  std::vector<NodePtr> parents;
  BackwardFn backward;
  std::string_view op = "leaf";
  bool requires_grad = false;

  // Gradient of the current backward pass; empty outside of backward().
  std::vector<double> pass_grad;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  ~Node();

  bool is_leaf() const { return parents.empty(); }

  // Returns this node's pass gradient, allocating zeros on first use.
  std::vector<double>& accum();
};

class DiffValue {
 public:
  DiffValue() = default;
  explicit DiffValue(NodePtr node) : node_(std::move(node)) {}

  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  std::size_t rank() const { return node_->value.rank(); }
  std::size_t size() const { return node_->value.size(); }
  const Tensor& value() const { return node_->value; }
  std::span<const double> data() const { return node_->value.values(); }
  // Leaves only: in-place parameter updates between passes.
  std::span<double> mutable_data();
  double item() const;

  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf(); }
  std::string_view op() const { return node_->op; }
  bool valid() const { return node_ != nullptr; }

  // Scalar results only.
  void backward() const;
  void backward(const Tensor& seed) const;

  Node& node() const { return *node_; }
  const NodePtr& ptr() const { return node_; }

 private:
  NodePtr node_;
};

// Trainable leaf with a zeroed gradient slot.
DiffValue variable(Tensor value);
// Leaf that never receives gradients.
DiffValue constant(Tensor value);

// Records `value` as the output of `op`. When gradients are disabled or no
// input requires them the result is a constant and `fn` is dropped.
DiffValue record(Tensor value, std::vector<DiffValue> inputs, std::string_view op, BackwardFn fn);

bool grad_enabled();

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

struct Parameter {
  std::string name;
  DiffValue value;
};

}  // namespace dircn::ad
