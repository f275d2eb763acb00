#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "numcore/tensor.hpp"

namespace numcore {

class Graph;

// One operation record on the tape: its output value, the (lazily
// allocated) gradient of the loss with respect to that output, and a
// closure that scatters that gradient into the parents.
class Node {
 public:
  const Tensor& value() const { return value_; }
  const Tensor& grad() const;
  bool has_grad() const { return has_grad_; }
  bool needs_grad() const { return needs_grad_; }
  Index id() const { return id_; }

 private:
  friend class Graph;

  Tensor value_;
  Tensor grad_;
  bool has_grad_ = false;
  bool needs_grad_ = false;
  std::vector<Node*> parents_;
  std::function<void(Node&)> backprop_;
  const Graph* owner_ = nullptr;
  Index id_ = -1;
};

// Handle to a node; cheap to copy, valid as long as the graph lives.
class Value {
 public:
  Value() = default;
  explicit Value(Node* n) : node_(n) {}

  bool valid() const { return node_ != nullptr; }
  const Tensor& tensor() const { return node_->value(); }
  const Shape& shape() const { return node_->value().shape(); }
  Node* node() const { return node_; }

 private:
  Node* node_ = nullptr;
};

// Append-only tape. Nodes are created in evaluation order, which is a
// topological order by construction; backward() walks it once in reverse.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Value leaf(Tensor value, bool requires_grad = false);
  Value constant(Tensor value) { return leaf(std::move(value), false); }

  // Used by the operations in ops.hpp. `backprop` receives the node and
  // must accumulate into the parents via accumulate_grad().
  Value make(Tensor value, std::vector<Value> parents,
             std::function<void(Node&)> backprop);

  // Reverse pass from a scalar loss. Gradients of all nodes reachable
  // from the loss and marked as needing gradients become available.
  void backward(Value loss);

  // Gradient of the last backward()'s loss w.r.t. `v`. Throws LookupError
  // if the value belongs to another graph or took no part in the loss.
  const Tensor& grad(Value v) const;

  // this->grad(v) without throwing: nullptr when absent.
  const Tensor* grad_if_any(Value v) const;

  static void accumulate_grad(Node* parent, const Tensor& contribution);
  static Tensor& grad_buffer(Node* parent);  // allocates zeros on first use

  size_t node_count() const { return nodes_.size(); }

  // Finite checks after each op cost one pass over the output; they are on
  // by default so a NaN is caught at its source.
  bool finite_checks() const { return finite_checks_; }
  void set_finite_checks(bool on) { finite_checks_ = on; }

 private:
  Node* new_node();

  std::vector<std::unique_ptr<Node>> nodes_;
  bool finite_checks_ = true;
};

}  // namespace numcore
