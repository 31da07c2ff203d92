// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include "ddt/attention.hpp"
#include "ddt/ops.hpp"

namespace ddt::attn {

void DeformAttnConfig::validate() const {
  if (channels <= 0 || heads <= 0) throw std::invalid_argument("attention: channels and heads must be positive");
  if (channels % heads != 0) {
    throw std::invalid_argument("attention: channels " + std::to_string(channels) + " not divisible by heads " +
                                std::to_string(heads));
  }
  if (gamma < 1) throw std::invalid_argument("attention: gamma must be >= 1");
  if (offset_scale < 0) throw std::invalid_argument("attention: offset_scale must be >= 0");
}

std::string to_string(AttentionOp op) {
  switch (op) {
    case AttentionOp::kDeformable: return "deformable";
    case AttentionOp::kDense: return "dense";
    case AttentionOp::kMlpMixer: return "mlp-mixer";
  }
  return "?";
}

AttentionOp attention_op_from_string(const std::string& name) {
  if (name == "deformable") return AttentionOp::kDeformable;
  if (name == "dense") return AttentionOp::kDense;
  if (name == "mlp-mixer") return AttentionOp::kMlpMixer;
  throw std::invalid_argument("unknown attention op '" + name + "' (expected deformable, dense or mlp-mixer)");
}

namespace {

void check_divisible(std::int64_t h, std::int64_t w, int gamma) {
  if (gamma < 1 || h % gamma != 0 || w % gamma != 0) {
    throw std::invalid_argument("deformable attention: spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                                " not divisible by gamma " + std::to_string(gamma));
  }
}

}  // namespace

template <typename T>
Tensor<T> reference_grid(std::int64_t h, std::int64_t w, int gamma) {
  check_divisible(h, w, gamma);
  const std::int64_t hg = h / gamma, wg = w / gamma;
  Tensor<T> grid(Shape{hg, wg, 2});
  const T half = static_cast<T>(gamma - 1) / T(2);
  for (std::int64_t i = 0; i < hg; ++i) {
    for (std::int64_t j = 0; j < wg; ++j) {
      grid[(i * wg + j) * 2 + 0] = nn::normalize_coord<T>(static_cast<T>(j * gamma) + half, w);
      grid[(i * wg + j) * 2 + 1] = nn::normalize_coord<T>(static_cast<T>(i * gamma) + half, h);
    }
  }
  return grid;
}

template <typename T>
Var<T> sample_deformed(Var<T> x, const DeformableField<T>& field) {
  const Var<T> coords = ops::add(field.offsets, field.ref_points);
  return ops::mul(nn::bilinear_sample(x, coords), field.modulation);
}

template <typename T>
Var<T> multi_head_attention(Var<T> q, Var<T> k, Var<T> v, int heads, Var<T>* probs) {
  if (q.rank() != 3 || k.rank() != 3 || v.shape() != k.shape() || q.dim(0) != k.dim(0) || q.dim(1) != k.dim(1)) {
    throw std::invalid_argument("multi_head_attention: incompatible q " + shape_str(q.shape()) + ", k " +
                                shape_str(k.shape()) + ", v " + shape_str(v.shape()));
  }
  const std::int64_t b = q.dim(0), c = q.dim(1), t = q.dim(2), s = k.dim(2);
  if (heads < 1 || c % heads != 0) throw std::invalid_argument("multi_head_attention: channels not divisible by heads");
  const std::int64_t d = c / heads;
  const Var<T> qh = ops::permute(ops::reshape(q, {b, heads, d, t}), {0, 1, 3, 2});
  const Var<T> kh = ops::reshape(k, {b, heads, d, s});
  const Var<T> vh = ops::reshape(v, {b, heads, d, s});
  const Var<T> scores = ops::scale(ops::matmul(qh, kh), static_cast<T>(1.0 / std::sqrt(static_cast<double>(d))));
  const Var<T> p = ops::softmax(scores, -1);
  if (probs) *probs = p;
  // z^T = v p^T keeps channels leading, so no permute is needed on the way out.
  const Var<T> zt = ops::matmul(vh, ops::permute(p, {0, 1, 3, 2}));
  return ops::reshape(zt, {b, c, t});
}

template <typename T>
DeformableAttention<T>::DeformableAttention(const DeformAttnConfig& cfg)
    : offset_dw(cfg.channels, cfg.channels, 5, nn::Conv2dOptions{cfg.gamma, 2, static_cast<int>(cfg.channels)}),
      offset_proj(cfg.channels, 3, 1),
      q_proj(cfg.channels, cfg.channels, 1),
      k_proj(cfg.channels, cfg.channels, 1),
      v_proj(cfg.channels, cfg.channels, 1),
      o_proj(cfg.channels, cfg.channels, 1),
      cfg_(cfg) {
  cfg_.validate();
}

template <typename T>
DeformableField<T> DeformableAttention<T>::position_subnet(Tape<T>& tape, Var<T> x) {
  if (x.rank() != 4 || x.dim(1) != cfg_.channels) {
    throw std::invalid_argument("deformable attention: expected [N, " + std::to_string(cfg_.channels) +
                                ", H, W], got " + shape_str(x.shape()));
  }
  const std::int64_t h = x.dim(2), w = x.dim(3);
  check_divisible(h, w, cfg_.gamma);
  const std::int64_t hg = h / cfg_.gamma, wg = w / cfg_.gamma;

  const Var<T> raw = offset_proj.forward(tape, offset_dw.forward(tape, x));
  if (raw.dim(2) != hg || raw.dim(3) != wg) {
    throw std::logic_error("deformable attention: position sub-network produced " + shape_str(raw.shape()));
  }
  const auto parts = ops::split(raw, {2, 1}, 1);

  // Pixel offsets s*tanh(raw) converted to normalized units per axis.
  const T s = static_cast<T>(cfg_.effective_offset_scale());
  const auto to_norm = [s](std::int64_t extent) { return extent > 1 ? s * T(2) / static_cast<T>(extent - 1) : T(0); };
  const Var<T> axis_scale = tape.constant(Tensor<T>(Shape{1, 1, 1, 2}, std::vector<T>{to_norm(w), to_norm(h)}));
  const Var<T> dp = ops::permute(ops::tanh(parts[0]), {0, 2, 3, 1});

  DeformableField<T> field;
  field.ref_points = tape.constant(reference_grid<T>(h, w, cfg_.gamma).reshape({1, hg, wg, 2}));
  field.offsets = ops::mul(dp, axis_scale);
  field.modulation = ops::scale(ops::sigmoid(parts[1]), T(2));
  return field;
}

template <typename T>
Var<T> DeformableAttention<T>::forward(Tape<T>& tape, Var<T> x, AttentionTrace<T>* trace) {
  const DeformableField<T> field = position_subnet(tape, x);
  const Var<T> xs = sample_deformed(x, field);
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t tokens = xs.dim(2) * xs.dim(3);
  const Var<T> q = ops::reshape(q_proj.forward(tape, x), {n, c, h * w});
  const Var<T> k = ops::reshape(k_proj.forward(tape, xs), {n, c, tokens});
  const Var<T> v = ops::reshape(v_proj.forward(tape, xs), {n, c, tokens});
  Var<T> probs;
  const Var<T> z = multi_head_attention(q, k, v, cfg_.heads, &probs);
  if (trace) *trace = AttentionTrace<T>{field, xs, probs};
  return o_proj.forward(tape, ops::reshape(z, {n, c, h, w}));
}

template <typename T>
void DeformableAttention<T>::init(nn::Rng& rng) {
  offset_dw.init(rng);
  offset_proj.zero();
  q_proj.init(rng);
  k_proj.init(rng);
  v_proj.init(rng);
  o_proj.init(rng);
}

template <typename T>
void DeformableAttention<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  offset_dw.visit(prefix + ".offset_dw", fn);
  offset_proj.visit(prefix + ".offset_proj", fn);
  q_proj.visit(prefix + ".q", fn);
  k_proj.visit(prefix + ".k", fn);
  v_proj.visit(prefix + ".v", fn);
  o_proj.visit(prefix + ".o", fn);
}

template <typename T>
std::int64_t DeformableAttention<T>::parameter_count() const {
  return offset_dw.parameter_count() + offset_proj.parameter_count() + q_proj.parameter_count() +
         k_proj.parameter_count() + v_proj.parameter_count() + o_proj.parameter_count();
}

#define DDT_INSTANTIATE_ATTN(T)                                                                  \
  template Tensor<T> reference_grid<T>(std::int64_t, std::int64_t, int);                         \
  template Var<T> sample_deformed<T>(Var<T>, const DeformableField<T>&);                         \
  template Var<T> multi_head_attention<T>(Var<T>, Var<T>, Var<T>, int, Var<T>*);                 \
  template class DeformableAttention<T>;

DDT_INSTANTIATE_ATTN(float)
DDT_INSTANTIATE_ATTN(double)

}  // namespace ddt::attn
