// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over an explicit, per-forward-pass tape.
//
// A Tape owns every intermediate value produced while it is alive. Ops append
// one node each; Tape::backward() walks the nodes in reverse recording order
// exactly once. Parameters live outside the tape and receive their gradient at
// the end of backward(). A tape may be differentiated more than once; every
// call recomputes node gradients from scratch.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "ddt/tensor.hpp"

namespace ddt {

template <typename T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  explicit Parameter(Tensor<T> v) : value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor<T>(value.shape()); }
};

template <typename T>
using ParamVisitor = std::function<void(const std::string& name, Parameter<T>& param)>;

template <typename T>
class Tape;

// Handle to one node of a Tape. Cheap to copy; valid while its tape lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::int64_t dim(int axis) const { return value().dim(axis); }
  int rank() const { return value().rank(); }
  bool requires_grad() const;
  bool valid() const noexcept { return tape_ != nullptr; }

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class GradMode {
  kOverwrite,   // parameter grads are zeroed before accumulation
  kAccumulate,  // parameter grads keep their previous contents
};

template <typename T>
class Tape {
 public:
  // Called with the tape and the node's own id once its output gradient is final.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  // Differentiable input; read its gradient with grad() after backward().
  Var<T> leaf(Tensor<T> value);
  // The tape references `param` without copying; it must outlive the tape.
  Var<T> param(Parameter<T>& param);

  Var<T> record(const char* op, Tensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn backward);
  Var<T> record(const char* op, Tensor<T> value, const std::vector<Var<T>>& inputs,
                BackwardFn backward);

  const Tensor<T>& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Upstream gradient of node `id` (valid inside its BackwardFn).
  const Tensor<T>& grad_of(std::size_t id) const;
  // Gradient buffer of node `id`, allocated as zeros on first use.
  Tensor<T>& grad_buffer(std::size_t id);

  // Gradient of a leaf or parameter node after backward().
  const Tensor<T>& grad(Var<T> v) const;

  void backward(Var<T> loss, GradMode mode = GradMode::kOverwrite);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    const char* op = "";
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
    bool has_grad = false;
    Tensor<T> grad;
  };

  Var<T> push(Node node);

  std::deque<Node> nodes_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
  return tape_->requires_grad(id_);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace ddt
