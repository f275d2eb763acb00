#include "numcore/graph.hpp"

#include <cmath>

namespace numcore {

const Tensor& Node::grad() const {
  if (!has_grad_) {
    throw LookupError("node has no gradient (backward not run or unreachable)");
  }
  return grad_;
}

Node* Graph::new_node() {
  nodes_.push_back(std::make_unique<Node>());
  Node* n = nodes_.back().get();
  n->owner_ = this;
  n->id_ = static_cast<Index>(nodes_.size()) - 1;
  return n;
}

Value Graph::leaf(Tensor value, bool requires_grad) {
  Node* n = new_node();
  n->value_ = std::move(value);
  n->needs_grad_ = requires_grad;
  return Value(n);
}

Value Graph::make(Tensor value, std::vector<Value> parents,
                  std::function<void(Node&)> backprop) {
  if (finite_checks_ && !value.all_finite()) {
    throw NumericError("operation produced a non-finite value");
  }
  Node* n = new_node();
  n->value_ = std::move(value);
  for (const Value& p : parents) {
    if (!p.valid() || p.node()->owner_ != this) {
      throw LookupError("parent value does not belong to this graph");
    }
    n->parents_.push_back(p.node());
    if (p.node()->needs_grad_) n->needs_grad_ = true;
  }
  if (n->needs_grad_) n->backprop_ = std::move(backprop);
  return Value(n);
}

void Graph::backward(Value loss) {
  if (!loss.valid() || loss.node()->owner_ != this) {
    throw LookupError("loss does not belong to this graph");
  }
  if (loss.tensor().size() != 1) {
    throw DimensionError("backward requires a scalar loss, got " +
                         shape_str(loss.shape()));
  }

  // Clear any previous pass.
  for (auto& n : nodes_) {
    n->grad_ = Tensor();
    n->has_grad_ = false;
  }

  // Mark the subgraph the loss depends on.
  std::vector<bool> reachable(nodes_.size(), false);
  std::vector<Node*> stack{loss.node()};
  reachable[static_cast<size_t>(loss.node()->id_)] = true;
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    for (Node* p : n->parents_) {
      if (!reachable[static_cast<size_t>(p->id_)]) {
        reachable[static_cast<size_t>(p->id_)] = true;
        stack.push_back(p);
      }
    }
  }

  grad_buffer(loss.node())[0] = 1.0;

  for (Index i = loss.node()->id_; i >= 0; --i) {
    Node* n = nodes_[static_cast<size_t>(i)].get();
    if (!reachable[static_cast<size_t>(i)] || !n->has_grad_) continue;
    if (n->needs_grad_ && n->backprop_) n->backprop_(*n);
  }
}

const Tensor* Graph::grad_if_any(Value v) const {
  if (!v.valid() || v.node()->owner_ != this) {
    throw LookupError("value does not belong to this graph");
  }
  return v.node()->has_grad_ ? &v.node()->grad_ : nullptr;
}

const Tensor& Graph::grad(Value v) const {
  const Tensor* g = grad_if_any(v);
  if (g == nullptr) throw LookupError("no gradient recorded for this value");
  return *g;
}

Tensor& Graph::grad_buffer(Node* parent) {
  if (!parent->has_grad_) {
    parent->grad_ = Tensor(parent->value_.shape());
    parent->has_grad_ = true;
  }
  return parent->grad_;
}

void Graph::accumulate_grad(Node* parent, const Tensor& contribution) {
  grad_buffer(parent).add_scaled(contribution, 1.0);
}

}  // namespace numcore
