// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/autodiff.hpp"

#include <stdexcept>

namespace ddt {

template <typename T>
Var<T> Tape<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.op = "constant";
  n.owned = std::move(value);
  n.is_leaf = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value) {
  Node n;
  n.op = "leaf";
  n.owned = std::move(value);
  n.requires_grad = true;
  n.is_leaf = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& param) {
  Node n;
  n.op = "param";
  n.external = &param.value;
  n.param = &param;
  n.requires_grad = true;
  n.is_leaf = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::record(const char* op, Tensor<T> value, std::initializer_list<Var<T>> inputs,
                       BackwardFn backward) {
  return record(op, std::move(value), std::vector<Var<T>>(inputs), std::move(backward));
}

template <typename T>
Var<T> Tape<T>::record(const char* op, Tensor<T> value, const std::vector<Var<T>>& inputs,
                       BackwardFn backward) {
  Node n;
  n.op = op;
  bool inputs_finite = true;
  for (const auto& v : inputs) {
    if (&v.tape() != this) throw std::logic_error(std::string(op) + ": input recorded on another tape");
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
#ifndef NDEBUG
    inputs_finite = inputs_finite && this->value(v.id()).all_finite();
#endif
  }
#ifndef NDEBUG
  if (inputs_finite && !value.all_finite()) {
    throw std::logic_error(std::string(op) + ": non-finite output from finite inputs");
  }
#else
  (void)inputs_finite;
#endif
  n.owned = std::move(value);
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename T>
const Tensor<T>& Tape<T>::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.owned;
}

template <typename T>
const Tensor<T>& Tape<T>::grad_of(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (!n.has_grad) throw std::logic_error("no gradient recorded for node " + std::to_string(id));
  return n.grad;
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.has_grad) {
    n.grad = Tensor<T>(value(id).shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_.at(v.id());
  if (!n.requires_grad) throw std::logic_error("grad() of a node that does not require grad");
  if (!n.has_grad) throw std::logic_error("grad() before backward() or node unreachable from loss");
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss, GradMode mode) {
  if (&loss.tape() != this) throw std::logic_error("backward: loss belongs to another tape");
  if (value(loss.id()).size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                shape_str(value(loss.id()).shape()));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor<T>();
    if (mode == GradMode::kOverwrite && n.param) n.param->zero_grad();
  }
  if (!nodes_[loss.id()].requires_grad) return;

  grad_buffer(loss.id()).fill(T(1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) {
      n.backward(*this, i);
      if (!n.is_leaf) {
        n.grad = Tensor<T>();
        n.has_grad = false;
      }
    }
    if (n.param) {
      Parameter<T>& p = *n.param;
      if (p.grad.shape() != p.value.shape()) p.zero_grad();
      auto dst = p.grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace ddt
