// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "ddt/attention.hpp"
#include "ddt/ops.hpp"

namespace ddt::attn {

template <typename T>
DenseAttention<T>::DenseAttention(std::int64_t channels, int heads)
    : q_proj(channels, channels, 1),
      k_proj(channels, channels, 1),
      v_proj(channels, channels, 1),
      o_proj(channels, channels, 1),
      heads_(heads) {
  DeformAttnConfig{channels, heads, 1, 0.0}.validate();
}

template <typename T>
Var<T> DenseAttention<T>::forward(Tape<T>& tape, Var<T> x) {
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Var<T> q = ops::reshape(q_proj.forward(tape, x), {n, c, h * w});
  const Var<T> k = ops::reshape(k_proj.forward(tape, x), {n, c, h * w});
  const Var<T> v = ops::reshape(v_proj.forward(tape, x), {n, c, h * w});
  return o_proj.forward(tape, ops::reshape(multi_head_attention(q, k, v, heads_), {n, c, h, w}));
}

template <typename T>
void DenseAttention<T>::init(nn::Rng& rng) {
  q_proj.init(rng);
  k_proj.init(rng);
  v_proj.init(rng);
  o_proj.init(rng);
}

template <typename T>
void DenseAttention<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  q_proj.visit(prefix + ".q", fn);
  k_proj.visit(prefix + ".k", fn);
  v_proj.visit(prefix + ".v", fn);
  o_proj.visit(prefix + ".o", fn);
}

template <typename T>
std::int64_t DenseAttention<T>::parameter_count() const {
  return q_proj.parameter_count() + k_proj.parameter_count() + v_proj.parameter_count() + o_proj.parameter_count();
}

template <typename T>
TokenMixer<T>::TokenMixer(std::int64_t channels, std::int64_t extent)
    : v_proj(channels, channels, 1),
      o_proj(channels, channels, 1),
      mix(Tensor<T>(Shape{extent * extent, extent * extent})),
      mix_bias(Tensor<T>(Shape{1, 1, extent * extent})),
      extent_(extent) {
  if (extent <= 0) throw std::invalid_argument("TokenMixer: extent must be positive");
}

template <typename T>
Var<T> TokenMixer<T>::forward(Tape<T>& tape, Var<T> x) {
  const std::int64_t n = x.dim(0), c = x.dim(1);
  if (x.dim(2) != extent_ || x.dim(3) != extent_) {
    throw std::invalid_argument("TokenMixer: built for " + std::to_string(extent_) + "x" + std::to_string(extent_) +
                                " inputs, got " + shape_str(x.shape()));
  }
  const Var<T> v = ops::reshape(v_proj.forward(tape, x), {n, c, extent_ * extent_});
  const Var<T> mixed = ops::add(ops::matmul(v, tape.param(mix)), tape.param(mix_bias));
  return o_proj.forward(tape, ops::reshape(mixed, {n, c, extent_, extent_}));
}

template <typename T>
void TokenMixer<T>::init(nn::Rng& rng) {
  v_proj.init(rng);
  o_proj.init(rng);
  nn::trunc_normal(mix.value, rng, 0.02);
  mix_bias.value.fill(T(0));
}

template <typename T>
void TokenMixer<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  v_proj.visit(prefix + ".v", fn);
  fn(prefix + ".mix.weight", mix);
  fn(prefix + ".mix.bias", mix_bias);
  o_proj.visit(prefix + ".o", fn);
}

template <typename T>
std::int64_t TokenMixer<T>::parameter_count() const {
  return v_proj.parameter_count() + o_proj.parameter_count() + static_cast<std::int64_t>(mix.value.size()) +
         static_cast<std::int64_t>(mix_bias.value.size());
}

template <typename T>
std::unique_ptr<SpatialMixer<T>> make_mixer(AttentionOp op, const DeformAttnConfig& cfg, std::int64_t extent) {
  switch (op) {
    case AttentionOp::kDeformable: return std::make_unique<DeformableAttention<T>>(cfg);
    case AttentionOp::kDense: return std::make_unique<DenseAttention<T>>(cfg.channels, cfg.heads);
    case AttentionOp::kMlpMixer: return std::make_unique<TokenMixer<T>>(cfg.channels, extent);
  }
  throw std::invalid_argument("make_mixer: unknown attention op");
}

template class DenseAttention<float>;
template class DenseAttention<double>;
template class TokenMixer<float>;
template class TokenMixer<double>;
template std::unique_ptr<SpatialMixer<float>> make_mixer<float>(AttentionOp, const DeformAttnConfig&, std::int64_t);
template std::unique_ptr<SpatialMixer<double>> make_mixer<double>(AttentionOp, const DeformAttnConfig&, std::int64_t);

}  // namespace ddt::attn
