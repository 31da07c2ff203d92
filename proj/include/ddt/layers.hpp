// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter-owning wrappers around the nn kernels.

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "ddt/autodiff.hpp"
#include "ddt/nn.hpp"

namespace ddt::nn {

using Rng = std::mt19937_64;

// Fills `t` with N(0, std^2) samples truncated to [-2 std, 2 std] by resampling.
template <typename T>
void trunc_normal(Tensor<T>& t, Rng& rng, double std);

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::int64_t in_channels, std::int64_t out_channels, int kernel, Conv2dOptions opts = {},
         bool bias = true);

  Var<T> forward(Tape<T>& tape, Var<T> x);

  // Projection init: truncated normal weights, zero bias.
  void init(Rng& rng, double std = 0.02);
  void zero();

  void visit(const std::string& prefix, const ParamVisitor<T>& fn);
  std::int64_t parameter_count() const;

  std::int64_t in_channels() const { return in_channels_; }
  std::int64_t out_channels() const { return out_channels_; }
  const Conv2dOptions& options() const { return opts_; }
  bool has_bias() const { return has_bias_; }

  Parameter<T> weight;
  Parameter<T> bias;

 private:
  std::int64_t in_channels_ = 0;
  std::int64_t out_channels_ = 0;
  Conv2dOptions opts_{};
  bool has_bias_ = true;
};

// Channel-wise layer normalization of NCHW features.
template <typename T>
class LayerNorm2d {
 public:
  LayerNorm2d() = default;
  explicit LayerNorm2d(std::int64_t channels, T eps = T(1e-5));

  Var<T> forward(Tape<T>& tape, Var<T> x);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);
  std::int64_t parameter_count() const { return static_cast<std::int64_t>(2 * gamma.value.size()); }

  Parameter<T> gamma;
  Parameter<T> beta;

 private:
  T eps_ = T(1e-5);
};

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class LayerNorm2d<float>;
extern template class LayerNorm2d<double>;

}  // namespace ddt::nn
