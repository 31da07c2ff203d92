// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "ddt/autodiff.hpp"

namespace ddt::harness {

// Mean absolute error between equally shaped tensors.
template <typename T>
Var<T> l1_loss(Var<T> pred, Var<T> target);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// One decoupled-decay AdamW update of `w` at step t >= 1:
//   w -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * w)
template <typename T>
void adamw_update(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& m, Tensor<T>& v, std::int64_t t, double lr,
                  const AdamWConfig& cfg);

// Per-parameter moment state keyed by parameter name.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update to every visited parameter using its current grad.
  void step(const std::function<void(const ParamVisitor<T>&)>& visit_params, double lr);

  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  const AdamWConfig& config() const { return cfg_; }

  // Moments as "adam.m/<name>" and "adam.v/<name>".
  std::map<std::string, const Tensor<T>*> state_tensors() const;
  void load_state(const std::map<std::string, Tensor<T>>& tensors, std::int64_t steps);

 private:
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
  std::map<std::string, Tensor<T>> m_, v_;
};

// lr_final + (lr_init - lr_final) * (1 + cos(pi t / T)) / 2, clamped to
// lr_final once t >= T.
double cosine_lr(std::int64_t t, std::int64_t total, double lr_init, double lr_final);

}  // namespace ddt::harness
