// Copyright 2026 The p2p Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Reverse-mode automatic differentiation over Tensor values. Each op builds a
// Node holding its value, its parents and a closure that pushes the node's
// gradient to the parents. backward() runs the closures in reverse
// topological order.

#include <functional>
#include <memory>
#include <vector>

#include "p2p/nn/tensor.hpp"

namespace p2p::nn {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  // Zero-initialised gradient buffer shaped like the value.
  Tensor<T>& grad_buffer() {
    if (grad.empty() && !value.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

// Thread-local switch; while a NoGradGuard is alive ops record no graph.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static Var parameter(Tensor<T> value) { return Var(std::move(value), true); }

  bool defined() const { return node_ != nullptr; }
  explicit operator bool() const { return defined(); }

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(std::size_t i) const { return node_->value.dim(i); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& grad() { return node_->grad_buffer(); }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.fill(T(0));
  }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Wraps an op result. The closure is only kept (and parents only linked) when
// gradients are enabled and some parent requires them.
template <typename T>
Var<T> make_result(Tensor<T> value, std::initializer_list<Var<T>> parents,
                   std::function<void(Node<T>&)> backward) {
  Var<T> out(std::move(value));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const Var<T>& p : parents) any = any || (p.defined() && p.requires_grad());
  if (!any) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  for (const Var<T>& p : parents) node.parents.push_back(p.node());
  node.backward = std::move(backward);
  return out;
}

// Seeds d(root)/d(root) = 1 (root must hold one element) and accumulates
// gradients into every reachable node that requires them.
template <typename T>
void backward(const Var<T>& root);

// Parent gradient buffer, or nullptr when that parent needs no gradient.
template <typename T>
Tensor<T>* parent_grad(Node<T>& node, std::size_t i) {
  Node<T>* p = node.parents[i].get();
  if (p == nullptr || !p->requires_grad) return nullptr;
  return &p->grad_buffer();
}

template <typename T>
const Tensor<T>& parent_value(const Node<T>& node, std::size_t i) {
  return node.parents[i]->value;
}

}  // namespace p2p::nn
