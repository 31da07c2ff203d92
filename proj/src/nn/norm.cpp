// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <memory>
#include <stdexcept>

#include "ddt/flops.hpp"
#include "ddt/nn.hpp"

namespace ddt::nn {

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  const Tensor<T>& xv = x.value();
  if (xv.rank() != 4) throw std::invalid_argument("layer_norm: expected NCHW input, got " + shape_str(xv.shape()));
  const std::int64_t n = xv.dim(0), c = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  if (gamma.value().size() != static_cast<std::size_t>(c) || beta.value().size() != static_cast<std::size_t>(c)) {
    throw std::invalid_argument("layer_norm: affine parameters of shape " + shape_str(gamma.shape()) +
                                " do not match " + std::to_string(c) + " channels");
  }
  if (!(eps > 0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const T* pg = gamma.value().ptr();
  const T* pb = beta.value().ptr();
  Tensor<T> out(xv.shape());
  auto xhat = std::make_shared<Tensor<T>>(xv.shape());
  auto rstd = std::make_shared<Tensor<T>>(Shape{n, plane});
  std::vector<T> mu(plane), var(plane);
  const T inv_c = T(1) / static_cast<T>(c);
  for (std::int64_t b = 0; b < n; ++b) {
    const T* px = xv.ptr() + b * c * plane;
    std::fill(mu.begin(), mu.end(), T(0));
    std::fill(var.begin(), var.end(), T(0));
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t p = 0; p < plane; ++p) mu[p] += px[ch * plane + p];
    for (std::int64_t p = 0; p < plane; ++p) mu[p] *= inv_c;
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t p = 0; p < plane; ++p) {
        const T d = px[ch * plane + p] - mu[p];
        var[p] += d * d;
      }
    T* rs = rstd->ptr() + b * plane;
    for (std::int64_t p = 0; p < plane; ++p) rs[p] = T(1) / std::sqrt(var[p] * inv_c + eps);
    T* xh = xhat->ptr() + b * c * plane;
    T* po = out.ptr() + b * c * plane;
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t p = 0; p < plane; ++p) {
        const std::int64_t i = ch * plane + p;
        xh[i] = (px[i] - mu[p]) * rs[p];
        po[i] = xh[i] * pg[ch] + pb[ch];
      }
  }
  count_flops(static_cast<std::uint64_t>(6 * xv.size()));

  const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
  return x.tape().record(
      "layer_norm", std::move(out), {x, gamma, beta},
      [xi, gi, bi, xhat, rstd, n, c, plane](Tape<T>& tape, std::size_t self) {
        const Tensor<T>& g = tape.grad_of(self);
        const T* gam = tape.value(gi).ptr();
        T* ggam = tape.requires_grad(gi) ? tape.grad_buffer(gi).ptr() : nullptr;
        T* gbet = tape.requires_grad(bi) ? tape.grad_buffer(bi).ptr() : nullptr;
        T* gx = tape.requires_grad(xi) ? tape.grad_buffer(xi).ptr() : nullptr;
        std::vector<T> s1(plane), s2(plane);
        const T inv_c = T(1) / static_cast<T>(c);
        for (std::int64_t b = 0; b < n; ++b) {
          const T* pg = g.ptr() + b * c * plane;
          const T* xh = xhat->ptr() + b * c * plane;
          for (std::int64_t ch = 0; ch < c; ++ch) {
            T sg = 0, sgx = 0;
            for (std::int64_t p = 0; p < plane; ++p) {
              sg += pg[ch * plane + p];
              sgx += pg[ch * plane + p] * xh[ch * plane + p];
            }
            if (ggam) ggam[ch] += sgx;
            if (gbet) gbet[ch] += sg;
          }
          if (!gx) continue;
          std::fill(s1.begin(), s1.end(), T(0));
          std::fill(s2.begin(), s2.end(), T(0));
          for (std::int64_t ch = 0; ch < c; ++ch)
            for (std::int64_t p = 0; p < plane; ++p) {
              const T d = pg[ch * plane + p] * gam[ch];
              s1[p] += d;
              s2[p] += d * xh[ch * plane + p];
            }
          const T* rs = rstd->ptr() + b * plane;
          T* out = gx + b * c * plane;
          for (std::int64_t ch = 0; ch < c; ++ch)
            for (std::int64_t p = 0; p < plane; ++p) {
              const std::int64_t i = ch * plane + p;
              const T d = pg[i] * gam[ch];
              out[i] += rs[p] * (d - s1[p] * inv_c - xh[i] * s2[p] * inv_c);
            }
        }
      });
}

template Var<float> layer_norm(Var<float>, Var<float>, Var<float>, float);
template Var<double> layer_norm(Var<double>, Var<double>, Var<double>, double);

}  // namespace ddt::nn
