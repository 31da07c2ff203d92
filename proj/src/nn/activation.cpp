// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "ddt/flops.hpp"
#include "ddt/nn.hpp"

namespace ddt::nn {

template <typename T>
Var<T> gelu(Var<T> x) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(0.5) * xv[i] * (T(1) + std::erf(xv[i] * inv_sqrt2));
  count_flops(static_cast<std::uint64_t>(4 * out.size()));
  const std::size_t xi = x.id();
  return x.tape().record("gelu", std::move(out), {x}, [xi, inv_sqrt2](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& g = tape.grad_of(self);
    const Tensor<T>& xv = tape.value(xi);
    Tensor<T>& gx = tape.grad_buffer(xi);
    const T inv_sqrt_2pi = inv_sqrt2 * std::numbers::inv_sqrtpi_v<T>;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = xv[i];
      const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      gx[i] += g[i] * (cdf + v * pdf);
    }
  });
}

template Var<float> gelu(Var<float>);
template Var<double> gelu(Var<double>);

}  // namespace ddt::nn
