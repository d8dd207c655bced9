/* Copyright 2026 The atraj Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATRAJ_GRAPH_HPP_
#define ATRAJ_GRAPH_HPP_

#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "atraj/errors.hpp"
#include "atraj/tensor.hpp"

namespace atraj {

template <typename Scalar>
class Graph;

/// Handle to a value recorded in a Graph. Cheap to copy; only valid while
/// the owning graph is alive.
template <typename Scalar>
struct Var {
  Graph<Scalar> *graph = nullptr;
  std::size_t id = 0;

  const Tensor<Scalar> &value() const;
  const Shape &shape() const { return value().shape(); }
  std::size_t extent(int axis) const { return value().extent(axis); }
};

/// Define-by-run tape. Every primitive appends one node holding its output
/// and a closure that maps the output adjoint onto the input adjoints;
/// `backward` replays those closures in exact reverse order.
///
/// A graph and the tensors it references are confined to one thread.
template <typename Scalar>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph &, const Vector<Scalar> &)>;

  Graph() = default;
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  /// Non-owning, gradient-free reference to a caller tensor.
  Var<Scalar> input(const Tensor<Scalar> &t) {
    Node &n = nodes_.emplace_back();
    n.ref = &t;
    n.op = "input";
    return {this, nodes_.size() - 1};
  }

  Var<Scalar> constant(Tensor<Scalar> t) {
    Node &n = nodes_.emplace_back();
    n.owned = std::move(t);
    n.op = "constant";
    return {this, nodes_.size() - 1};
  }

  /// Registers a leaf. When the leaf requires a gradient, `backward`
  /// writes dLoss/dleaf into `leaf.grad()`. Registering the same leaf
  /// twice returns the same handle.
  Var<Scalar> parameter(Tensor<Scalar> &leaf) {
    if (auto it = leaf_index_.find(&leaf); it != leaf_index_.end()) {
      return {this, it->second};
    }
    Node &n = nodes_.emplace_back();
    n.ref = &leaf;
    n.op = "parameter";
    if (leaf.requires_grad()) {
      n.leaf = &leaf;
      n.needs_grad = true;
      leaves_.push_back(nodes_.size() - 1);
    }
    leaf_index_.emplace(&leaf, nodes_.size() - 1);
    return {this, nodes_.size() - 1};
  }

  /// Appends the output of a primitive. The closure is kept only when at
  /// least one input participates in differentiation.
  Var<Scalar> record(const char *op, Tensor<Scalar> out,
                     std::initializer_list<Var<Scalar>> inputs,
                     BackwardFn backward) {
    return record(op, std::move(out), std::vector<Var<Scalar>>(inputs),
                  std::move(backward));
  }

  Var<Scalar> record(const char *op, Tensor<Scalar> out,
                     const std::vector<Var<Scalar>> &inputs,
                     BackwardFn backward) {
    if (backward_done_) {
      throw ContractError("graph already differentiated; build a new graph");
    }
    if (!out.all_finite()) {
      throw NumericError(std::string("non-finite output from ") + op);
    }
    bool needs = false;
    for (const auto &v : inputs) {
      if (v.graph != this) throw ContractError("operand from another graph");
      needs = needs || nodes_[v.id].needs_grad;
    }
    Node &n = nodes_.emplace_back();
    n.owned = std::move(out);
    n.op = op;
    n.needs_grad = needs;
    if (needs) n.backward = std::move(backward);
    return {this, nodes_.size() - 1};
  }

  const Tensor<Scalar> &value(std::size_t id) const {
    const Node &n = nodes_[id];
    return n.ref ? *n.ref : n.owned;
  }

  bool needs_grad(const Var<Scalar> &v) const { return nodes_[v.id].needs_grad; }

  template <typename Expr>
  void accumulate(const Var<Scalar> &v, const Expr &delta) {
    Node &n = nodes_[v.id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = delta;
    } else {
      n.grad += delta;
    }
  }

  /// Adjoint accumulated for `v` by the last backward pass (empty when
  /// `v` was not reached).
  const Vector<Scalar> &adjoint(const Var<Scalar> &v) const {
    return nodes_[v.id].grad;
  }

  void backward(const Var<Scalar> &loss) {
    if (backward_done_) {
      throw ContractError("backward called twice on the same graph");
    }
    const Tensor<Scalar> &l = value(loss.id);
    if (l.size() != 1) {
      throw ContractError("backward needs a scalar loss, got shape " +
                          shape_str(l.shape()));
    }
    backward_done_ = true;
    trace_.clear();
    nodes_[loss.id].grad = Vector<Scalar>::Ones(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node &n = nodes_[i];
      if (!n.needs_grad || n.grad.size() == 0) continue;
      if (n.backward) {
        trace_.push_back(i);
        n.backward(*this, n.grad);
      }
    }
    for (std::size_t id : leaves_) {
      Node &n = nodes_[id];
      if (n.grad.size() == 0) {
        n.leaf->grad().setZero(static_cast<Eigen::Index>(n.leaf->size()));
      } else {
        if (!n.grad.allFinite()) {
          throw NumericError("non-finite gradient reached a parameter");
        }
        n.leaf->grad() = n.grad;
      }
    }
  }

  /// Node ids whose adjoint closures ran during the last backward pass, in
  /// visiting order.
  const std::vector<std::size_t> &backward_trace() const { return trace_; }

  const std::string &op_name(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Scalar> owned;
    const Tensor<Scalar> *ref = nullptr;
    Tensor<Scalar> *leaf = nullptr;
    bool needs_grad = false;
    BackwardFn backward;
    Vector<Scalar> grad;
    std::string op;
  };

  std::deque<Node> nodes_;
  std::vector<std::size_t> leaves_;
  std::unordered_map<const void *, std::size_t> leaf_index_;
  std::vector<std::size_t> trace_;
  bool backward_done_ = false;
};

template <typename Scalar>
const Tensor<Scalar> &Var<Scalar>::value() const {
  return graph->value(id);
}

} // namespace atraj

#endif // ATRAJ_GRAPH_HPP_
