// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ddt/flops.hpp"
#include "ddt/harness/optim.hpp"

namespace ddt::harness {

template <typename T>
Var<T> l1_loss(Var<T> pred, Var<T> target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("l1_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                                shape_str(target.shape()));
  }
  const Tensor<T>& a = pred.value();
  const Tensor<T>& b = target.value();
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  const std::size_t n = a.size();
  count_flops(2 * n);
  const std::size_t pi = pred.id(), ti = target.id();
  return pred.tape().record("l1_loss", Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n))),
                            {pred, target}, [pi, ti, n](Tape<T>& tape, std::size_t self) {
                              const T g = tape.grad_of(self)[0] / static_cast<T>(n);
                              const Tensor<T>& av = tape.value(pi);
                              const Tensor<T>& bv = tape.value(ti);
                              Tensor<T>* ga = tape.requires_grad(pi) ? &tape.grad_buffer(pi) : nullptr;
                              Tensor<T>* gb = tape.requires_grad(ti) ? &tape.grad_buffer(ti) : nullptr;
                              for (std::size_t i = 0; i < n; ++i) {
                                const T d = av[i] - bv[i];
                                const T s = d > 0 ? g : (d < 0 ? -g : T(0));
                                if (ga) (*ga)[i] += s;
                                if (gb) (*gb)[i] -= s;
                              }
                            });
}

template <typename T>
void adamw_update(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& m, Tensor<T>& v, std::int64_t t, double lr,
                  const AdamWConfig& cfg) {
  if (t < 1) throw std::invalid_argument("adamw: step index must be >= 1, got " + std::to_string(t));
  if (g.shape() != w.shape() || m.shape() != w.shape() || v.shape() != w.shape()) {
    throw std::invalid_argument("adamw: state shape mismatch for parameter " + shape_str(w.shape()));
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = g[i];
    const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
    const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps) + cfg.weight_decay * w[i];
    w[i] = static_cast<T>(w[i] - lr * update);
  }
}

template <typename T>
void AdamW<T>::step(const std::function<void(const ParamVisitor<T>&)>& visit_params, double lr) {
  ++t_;
  visit_params([&](const std::string& name, Parameter<T>& p) {
    auto mit = m_.try_emplace(name, p.value.shape()).first;
    auto vit = v_.try_emplace(name, p.value.shape()).first;
    adamw_update(p.value, p.grad, mit->second, vit->second, t_, lr, cfg_);
  });
}

template <typename T>
std::map<std::string, const Tensor<T>*> AdamW<T>::state_tensors() const {
  std::map<std::string, const Tensor<T>*> out;
  for (const auto& [name, t] : m_) out.emplace("adam.m/" + name, &t);
  for (const auto& [name, t] : v_) out.emplace("adam.v/" + name, &t);
  return out;
}

template <typename T>
void AdamW<T>::load_state(const std::map<std::string, Tensor<T>>& tensors, std::int64_t steps) {
  m_.clear();
  v_.clear();
  for (const auto& [name, t] : tensors) {
    if (name.rfind("adam.m/", 0) == 0) m_.emplace(name.substr(7), t);
    if (name.rfind("adam.v/", 0) == 0) v_.emplace(name.substr(7), t);
  }
  t_ = steps;
}

double cosine_lr(std::int64_t t, std::int64_t total, double lr_init, double lr_final) {
  if (total <= 0 || t >= total) return lr_final;
  if (t <= 0) return lr_init;
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + std::cos(std::numbers::pi * frac));
}

template Var<float> l1_loss<float>(Var<float>, Var<float>);
template Var<double> l1_loss<double>(Var<double>, Var<double>);
template void adamw_update<float>(Tensor<float>&, const Tensor<float>&, Tensor<float>&, Tensor<float>&, std::int64_t,
                                  double, const AdamWConfig&);
template void adamw_update<double>(Tensor<double>&, const Tensor<double>&, Tensor<double>&, Tensor<double>&,
                                   std::int64_t, double, const AdamWConfig&);
template class AdamW<float>;
template class AdamW<double>;

}  // namespace ddt::harness
