#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "tensor/tensor.hpp"

namespace mmae::tensor {

template <typename T>
class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  bool valid() const noexcept { return tape != nullptr; }
};

// Gradients of a scalar loss keyed by leaf node, one entry per leaf that was
// registered with requires_grad. Each gradient has its parameter's shape.
template <typename T>
class GradMap {
 public:
  const Tensor<T>& at(Var<T> leaf) const {
    auto it = grads_.find(leaf.id);
    require(it != grads_.end(), ErrorCode::Contract, "no gradient recorded for this node");
    return it->second;
  }
  Tensor<T>& at(Var<T> leaf) {
    auto it = grads_.find(leaf.id);
    require(it != grads_.end(), ErrorCode::Contract, "no gradient recorded for this node");
    return it->second;
  }
  bool contains(Var<T> leaf) const { return grads_.count(leaf.id) != 0; }
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  friend class Tape<T>;
  std::unordered_map<std::uint32_t, Tensor<T>> grads_;
};

// Linear record of a computation. Node ids are assigned in creation order, so
// every node's parents precede it and reverse id order is a valid reverse
// topological order for backpropagation.
template <typename T>
class Tape {
 public:
  // Receives the gradient flowing into the node and pushes contributions to
  // its parents through accumulate().
  using BackwardFn = std::function<void(Tape&, const Tensor<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that references caller-owned storage; the tensor must outlive the tape.
  Var<T> parameter(const Tensor<T>& ref, bool requires_grad = true) {
    Node n;
    n.ref = &ref;
    n.requires_grad = requires_grad;
    n.leaf = true;
    return push(std::move(n));
  }

  Var<T> constant(Tensor<T> value) {
    Node n;
    n.value = std::move(value);
    n.leaf = true;
    return push(std::move(n));
  }

  // Records an operation result. The backward function is retained only when
  // some parent participates in differentiation.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardFn fn) {
    return record(std::move(value), std::vector<Var<T>>(parents), std::move(fn));
  }

  Var<T> record(Tensor<T> value, const std::vector<Var<T>>& parents, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    for (const auto& p : parents) {
      require(p.tape == this, ErrorCode::Contract, "operand belongs to a different tape");
      n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(fn);
    return push(std::move(n));
  }

  const Tensor<T>& value(Var<T> v) const {
    const Node& n = nodes_[v.id];
    return n.ref ? *n.ref : n.value;
  }

  bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Adds g into the gradient buffer of v (no-op for nodes outside the
  // differentiable subgraph).
  void accumulate(Var<T> v, const Tensor<T>& g) {
    if (!nodes_[v.id].requires_grad) return;
    Tensor<T>& slot = grad_slot(v);
    auto dst = slot.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  // Mutable gradient buffer of v, zero-initialised on first access.
  Tensor<T>& grad_slot(Var<T> v) {
    if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
    Tensor<T>& slot = grads_[v.id];
    if (slot.empty()) slot = Tensor<T>(value(v).shape());
    return slot;
  }

  GradMap<T> backward(Var<T> loss) {
    require(loss.tape == this, ErrorCode::Contract, "loss belongs to a different tape");
    require(value(loss).size() == 1, ErrorCode::Contract,
            "backward requires a scalar loss, got shape " + shape_string(value(loss).shape()));
    grads_.assign(nodes_.size(), Tensor<T>());
    if (nodes_[loss.id].requires_grad) {
      grad_slot(loss)[0] = T(1);
      for (std::int64_t id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.backward || grads_[id].empty()) continue;
        n.backward(*this, grads_[id]);
      }
    }
    GradMap<T> out;
    for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
      const Node& n = nodes_[id];
      if (!n.leaf || !n.requires_grad) continue;
      Var<T> v{this, id};
      out.grads_.emplace(id, grads_[id].empty() ? Tensor<T>(value(v).shape()) : std::move(grads_[id]));
    }
    grads_.clear();
    return out;
  }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* ref = nullptr;
    bool requires_grad = false;
    bool leaf = false;
    BackwardFn backward;
  };

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  std::vector<Tensor<T>> grads_;
};

}  // namespace mmae::tensor
