#pragma once

#include "gsvr/numerics/tensor.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

namespace gsvr::num {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor2& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Gradient restricted to a set of rows of a parameter matrix. Rows are sorted
// and unique; values has one row per entry of rows.
struct RowGradient {
  std::vector<std::size_t> rows;
  Tensor2 values;
};

// Result of Tape::backward, keyed by the address of the parameter storage the
// leaves were created from.
class Gradients {
 public:
  const RowGradient* find(const Tensor2& storage) const;
  bool contains(const Tensor2& storage) const { return find(storage) != nullptr; }
  // Full-shape gradient, zero on rows without an entry.
  Tensor2 dense(const Tensor2& storage) const;
  std::size_t size() const { return grads_.size(); }

  void insert(const Tensor2* storage, RowGradient grad);
  const std::unordered_map<const Tensor2*, RowGradient>& entries() const { return grads_; }

 private:
  std::unordered_map<const Tensor2*, RowGradient> grads_;
};

// Propagates a node's output gradient into its inputs via Tape::grad_slot.
using BackwardFn = std::function<void(Tape&, const Tensor2& grad_out)>;

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
// the node list is always topologically sorted.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor2 value);
  // Leaf over a whole parameter matrix; the value is copied at creation.
  Var parameter(const Tensor2& storage);
  // Row-gather leaf; gradients flow only to the gathered rows.
  Var gather(const Tensor2& storage, std::span<const std::size_t> rows, const char* table_name = "");

  Var record(Tensor2 value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor2 value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor2& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Accumulator for the gradient of a node, zero-allocated on first use.
  // Returns nullptr for nodes that do not need a gradient.
  Tensor2* grad_slot(Var v);
  // Adds expr into a node's gradient, assigning on first contribution so
  // large buffers are not zero-filled first.
  template <typename Expr>
  void accumulate(Var v, const Expr& expr);

  // Reverse sweep from a 1x1 loss node.
  Gradients backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Kind { Op, Constant, Parameter, Gather };
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    bool requires_grad = false;
    Kind kind = Kind::Op;
    BackwardFn backward;
    const Tensor2* storage = nullptr;
    std::vector<std::size_t> rows;
  };
  std::deque<Node> nodes_;
};

inline const Tensor2& Var::value() const { return tape_->value(id_); }

template <typename Expr>
void Tape::accumulate(Var v, const Expr& expr) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad.resize(n.value.rows(), n.value.cols());
    n.grad.noalias() = expr;
  } else {
    n.grad.noalias() += expr;
  }
}

}  // namespace gsvr::num
