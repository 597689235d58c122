#include "gsvr/numerics/tape.hpp"

#include "gsvr/errors.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace gsvr::num {

const RowGradient* Gradients::find(const Tensor2& storage) const {
  auto it = grads_.find(&storage);
  return it == grads_.end() ? nullptr : &it->second;
}

Tensor2 Gradients::dense(const Tensor2& storage) const {
  Tensor2 out = Tensor2::Zero(storage.rows(), storage.cols());
  if (const auto* g = find(storage)) {
    for (std::size_t i = 0; i < g->rows.size(); ++i) {
      out.row(static_cast<Eigen::Index>(g->rows[i])) += g->values.row(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

void Gradients::insert(const Tensor2* storage, RowGradient grad) { grads_[storage] = std::move(grad); }

Var Tape::constant(Tensor2 value) {
  Node n;
  n.value = std::move(value);
  n.kind = Kind::Constant;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(const Tensor2& storage) {
  Node n;
  n.value = storage;
  n.kind = Kind::Parameter;
  n.requires_grad = true;
  n.storage = &storage;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::gather(const Tensor2& storage, std::span<const std::size_t> rows, const char* table_name) {
  Node n;
  n.value.resize(static_cast<Eigen::Index>(rows.size()), storage.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(storage.rows())) {
      throw VocabularyError("id " + std::to_string(rows[i]) + " out of range for table '" + table_name +
                            "' with " + std::to_string(storage.rows()) + " rows");
    }
    n.value.row(static_cast<Eigen::Index>(i)) = storage.row(static_cast<Eigen::Index>(rows[i]));
  }
  n.kind = Kind::Gather;
  n.requires_grad = true;
  n.storage = &storage;
  n.rows.assign(rows.begin(), rows.end());
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor2 value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Tensor2 value, std::span<const Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("input belongs to a different tape");
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor2* Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return nullptr;
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Tensor2::Zero(n.value.rows(), n.value.cols());
  }
  return &n.grad;
}

Gradients Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("loss belongs to a different tape");
  Node& root = nodes_[loss.id()];
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ContractError("backward requires a scalar (1x1) loss, got " + shape_string(root.value));
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (root.requires_grad) root.grad = Tensor2::Ones(1, 1);

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.kind != Kind::Op || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }

  // Collect leaf gradients per storage. Several leaves may share storage
  // (e.g. one table gathered twice), so rows are merged.
  struct RowRef {
    std::size_t row;
    const Tensor2* grad;  // null when the leaf received no gradient
    Eigen::Index index;
  };
  std::map<const Tensor2*, std::vector<RowRef>> per_storage;
  std::map<const Tensor2*, Tensor2> dense;
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    Node& n = nodes_[i];
    if (n.kind == Kind::Parameter) {
      auto it = dense.find(n.storage);
      if (it == dense.end()) {
        it = dense.emplace(n.storage, n.grad.size() != 0 ? n.grad : Tensor2::Zero(n.value.rows(), n.value.cols()))
                 .first;
      } else if (n.grad.size() != 0) {
        it->second += n.grad;
      }
    } else if (n.kind == Kind::Gather) {
      auto& bucket = per_storage[n.storage];
      const Tensor2* g = n.grad.size() != 0 ? &n.grad : nullptr;
      for (std::size_t r = 0; r < n.rows.size(); ++r) bucket.push_back({n.rows[r], g, static_cast<Eigen::Index>(r)});
    }
  }

  Gradients out;
  for (auto& [storage, bucket] : per_storage) {
    if (auto d = dense.find(storage); d != dense.end()) {
      for (const auto& ref : bucket) {
        if (ref.grad) d->second.row(static_cast<Eigen::Index>(ref.row)) += ref.grad->row(ref.index);
      }
      continue;
    }
    std::stable_sort(bucket.begin(), bucket.end(), [](const RowRef& a, const RowRef& b) { return a.row < b.row; });
    RowGradient rg;
    for (const auto& ref : bucket) {
      if (rg.rows.empty() || rg.rows.back() != ref.row) rg.rows.push_back(ref.row);
    }
    rg.values = Tensor2::Zero(static_cast<Eigen::Index>(rg.rows.size()), storage->cols());
    std::size_t slot = 0;
    for (const auto& ref : bucket) {
      if (ref.row != rg.rows[slot]) ++slot;
      if (ref.grad) rg.values.row(static_cast<Eigen::Index>(slot)) += ref.grad->row(ref.index);
    }
    out.insert(storage, std::move(rg));
  }
  for (auto& [storage, g] : dense) {
    RowGradient rg;
    rg.rows.resize(static_cast<std::size_t>(g.rows()));
    for (std::size_t r = 0; r < rg.rows.size(); ++r) rg.rows[r] = r;
    rg.values = std::move(g);
    out.insert(storage, std::move(rg));
  }
  return out;
}

}  // namespace gsvr::num
