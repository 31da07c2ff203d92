// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace ddt::nn {

template <typename T>
void trunc_normal(Tensor<T>& t, Rng& rng, double std) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : t.data()) {
    double z = dist(rng);
    while (std::abs(z) > 2.0) z = dist(rng);
    v = static_cast<T>(z * std);
  }
}

template <typename T>
Conv2d<T>::Conv2d(std::int64_t in_channels, std::int64_t out_channels, int kernel, Conv2dOptions opts,
                  bool bias)
    : in_channels_(in_channels), out_channels_(out_channels), opts_(opts), has_bias_(bias) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || opts.groups <= 0 ||
      in_channels % opts.groups != 0 || out_channels % opts.groups != 0) {
    throw std::invalid_argument("Conv2d: invalid geometry " + std::to_string(in_channels) + "->" +
                                std::to_string(out_channels) + " k=" + std::to_string(kernel) +
                                " groups=" + std::to_string(opts.groups));
  }
  weight = Parameter<T>(Tensor<T>(Shape{out_channels, in_channels / opts.groups, kernel, kernel}));
  if (bias) this->bias = Parameter<T>(Tensor<T>(Shape{out_channels}));
}

template <typename T>
Var<T> Conv2d<T>::forward(Tape<T>& tape, Var<T> x) {
  std::optional<Var<T>> b;
  if (has_bias_) b = tape.param(bias);
  return conv2d(x, tape.param(weight), b, opts_);
}

template <typename T>
void Conv2d<T>::init(Rng& rng, double std) {
  trunc_normal(weight.value, rng, std);
  if (has_bias_) bias.value.fill(T(0));
}

template <typename T>
void Conv2d<T>::zero() {
  weight.value.fill(T(0));
  if (has_bias_) bias.value.fill(T(0));
}

template <typename T>
void Conv2d<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  fn(prefix + ".weight", weight);
  if (has_bias_) fn(prefix + ".bias", bias);
}

template <typename T>
std::int64_t Conv2d<T>::parameter_count() const {
  return static_cast<std::int64_t>(weight.value.size() + (has_bias_ ? bias.value.size() : 0));
}

template <typename T>
LayerNorm2d<T>::LayerNorm2d(std::int64_t channels, T eps)
    : gamma(Tensor<T>(Shape{channels}, T(1))), beta(Tensor<T>(Shape{channels})), eps_(eps) {
  if (!(eps > 0)) throw std::invalid_argument("LayerNorm2d: eps must be positive");
}

template <typename T>
Var<T> LayerNorm2d<T>::forward(Tape<T>& tape, Var<T> x) {
  return layer_norm(x, tape.param(gamma), tape.param(beta), eps_);
}

template <typename T>
void LayerNorm2d<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  fn(prefix + ".gamma", gamma);
  fn(prefix + ".beta", beta);
}

template void trunc_normal(Tensor<float>&, Rng&, double);
template void trunc_normal(Tensor<double>&, Rng&, double);
template class Conv2d<float>;
template class Conv2d<double>;
template class LayerNorm2d<float>;
template class LayerNorm2d<double>;

}  // namespace ddt::nn
