#include "dircn/autodiff/value.hpp"

#include <stdexcept>
#include <unordered_set>

#include "dircn/simd/kernels.hpp"

namespace dircn::ad {
namespace {

thread_local bool g_grad_enabled = true;

// Parents-before-children ordering of every node reachable from root that
// participates in differentiation.
std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

Node::~Node() {
  // Long chains would otherwise recurse once per node on destruction.
  std::vector<NodePtr> pending = std::move(parents);
  while (!pending.empty()) {
    NodePtr node = std::move(pending.back());
    pending.pop_back();
    if (node.use_count() == 1) {
      for (auto& p : node->parents) pending.push_back(std::move(p));
      node->parents.clear();
    }
  }
}

std::vector<double>& Node::accum() {
  if (pass_grad.empty()) pass_grad.assign(value.size(), 0.0);
  return pass_grad;
}

std::span<double> DiffValue::mutable_data() {
  if (!is_leaf()) throw std::logic_error("mutable_data: only leaves may be modified in place");
  return node_->value.values();
}

double DiffValue::item() const {
  if (size() != 1) throw std::invalid_argument("item: value of shape " + to_string(shape()) + " is not scalar");
  return node_->value[0];
}

void DiffValue::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

void DiffValue::backward() const {
  if (size() != 1) {
    throw std::invalid_argument("backward: output of shape " + to_string(shape()) +
                                " is not scalar; pass an explicit seed");
  }
  backward(Tensor(shape(), 1.0));
}

void DiffValue::backward(const Tensor& seed) const {
  if (seed.shape() != shape()) {
    throw std::invalid_argument("backward: seed shape " + to_string(seed.shape()) + " != " + to_string(shape()));
  }
  if (!node_->requires_grad) return;

  const auto order = topological_order(node_.get());
  for (Node* n : order) n->pass_grad.clear();
  node_->pass_grad = seed.storage();

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->pass_grad.empty() || !n->backward) continue;
    n->backward(*n);
  }

  const auto& k = simd::active();
  for (Node* n : order) {
    if (n->pass_grad.empty()) continue;
    if (n->is_leaf()) {
      if (n->grad.size() != n->pass_grad.size()) n->grad.assign(n->value.size(), 0.0);
      k.add(n->grad.size(), n->grad.data(), n->pass_grad.data(), n->grad.data());
      n->pass_grad.clear();
      n->pass_grad.shrink_to_fit();
    } else {
      n->grad = std::move(n->pass_grad);
      n->pass_grad = {};
    }
  }
}

DiffValue variable(Tensor value) {
  auto node = std::make_shared<Node>();
  node->grad.assign(value.size(), 0.0);
  node->value = std::move(value);
  node->requires_grad = true;
  return DiffValue(std::move(node));
}

DiffValue constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->grad.assign(value.size(), 0.0);
  node->value = std::move(value);
  return DiffValue(std::move(node));
}

DiffValue record(Tensor value, std::vector<DiffValue> inputs, std::string_view op, BackwardFn fn) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (auto& in : inputs) node->parents.push_back(in.ptr());
    node->backward = std::move(fn);
  }
  return DiffValue(std::move(node));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace dircn::ad
