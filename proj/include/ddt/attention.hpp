// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deformable multi-head attention and the alternative spatial operators used
// for ablations. Every operator maps [B, C, H, W] to [B, C, H, W].

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "ddt/autodiff.hpp"
#include "ddt/layers.hpp"

namespace ddt::attn {

struct DeformAttnConfig {
  std::int64_t channels = 32;
  int heads = 1;
  int gamma = 2;               // grid-reduction stride
  double offset_scale = 0.0;   // max offset in pixels; 0 selects gamma

  void validate() const;
  std::int64_t head_dim() const { return channels / heads; }
  double effective_offset_scale() const { return offset_scale > 0 ? offset_scale : gamma; }
};

enum class AttentionOp { kDeformable, kDense, kMlpMixer };

std::string to_string(AttentionOp op);
AttentionOp attention_op_from_string(const std::string& name);

// One reference point per gamma x gamma cell, at the cell center, as
// normalized (x, y) pairs. Shape [H/gamma, W/gamma, 2].
template <typename T>
Tensor<T> reference_grid(std::int64_t h, std::int64_t w, int gamma);

template <typename T>
struct DeformableField {
  Var<T> ref_points;  // [1, HG, WG, 2], normalized
  Var<T> offsets;     // [N, HG, WG, 2], normalized units
  Var<T> modulation;  // [N, 1, HG, WG], in (0, 2)
};

// x' = bilinear(x, clamp(p + dp)) * dm, modulation broadcast over channels.
template <typename T>
Var<T> sample_deformed(Var<T> x, const DeformableField<T>& field);

// Scaled dot-product attention with `heads` heads. q: [B, C, T], k and v:
// [B, C, S]; returns [B, C, T]. When `probs` is given it receives the
// attention weights [B, heads, T, S].
template <typename T>
Var<T> multi_head_attention(Var<T> q, Var<T> k, Var<T> v, int heads, Var<T>* probs = nullptr);

template <typename T>
struct AttentionTrace {
  DeformableField<T> field;
  Var<T> sampled;
  Var<T> probs;
};

template <typename T>
class SpatialMixer {
 public:
  virtual ~SpatialMixer() = default;
  virtual Var<T> forward(Tape<T>& tape, Var<T> x) = 0;
  virtual void init(nn::Rng& rng) = 0;
  virtual void visit(const std::string& prefix, const ParamVisitor<T>& fn) = 0;
  virtual std::int64_t parameter_count() const = 0;
};

template <typename T>
class DeformableAttention final : public SpatialMixer<T> {
 public:
  explicit DeformableAttention(const DeformAttnConfig& cfg);

  Var<T> forward(Tape<T>& tape, Var<T> x) override { return forward(tape, x, nullptr); }
  Var<T> forward(Tape<T>& tape, Var<T> x, AttentionTrace<T>* trace);

  // Offsets and modulation for x; spatial extents must be divisible by gamma.
  DeformableField<T> position_subnet(Tape<T>& tape, Var<T> x);

  // Trunc-normal projections; the position sub-network's last conv is zeroed,
  // which makes the initial field neutral (dp = 0, dm = 1).
  void init(nn::Rng& rng) override;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;
  std::int64_t parameter_count() const override;

  const DeformAttnConfig& config() const { return cfg_; }

  nn::Conv2d<T> offset_dw;    // 5x5 depthwise, stride gamma
  nn::Conv2d<T> offset_proj;  // 1x1, C -> 3
  nn::Conv2d<T> q_proj, k_proj, v_proj, o_proj;

 private:
  DeformAttnConfig cfg_;
};

// Full multi-head self-attention over every token of the input.
template <typename T>
class DenseAttention final : public SpatialMixer<T> {
 public:
  DenseAttention(std::int64_t channels, int heads);

  Var<T> forward(Tape<T>& tape, Var<T> x) override;
  void init(nn::Rng& rng) override;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;
  std::int64_t parameter_count() const override;

  nn::Conv2d<T> q_proj, k_proj, v_proj, o_proj;

 private:
  int heads_;
};

// Token-mixing MLP over a fixed extent x extent input, between a value and an
// output projection.
template <typename T>
class TokenMixer final : public SpatialMixer<T> {
 public:
  TokenMixer(std::int64_t channels, std::int64_t extent);

  Var<T> forward(Tape<T>& tape, Var<T> x) override;
  void init(nn::Rng& rng) override;
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override;
  std::int64_t parameter_count() const override;

  nn::Conv2d<T> v_proj, o_proj;
  Parameter<T> mix;       // [T, T], applied as tokens x mix
  Parameter<T> mix_bias;  // [T]

 private:
  std::int64_t extent_;
};

template <typename T>
std::unique_ptr<SpatialMixer<T>> make_mixer(AttentionOp op, const DeformAttnConfig& cfg, std::int64_t extent);

}  // namespace ddt::attn
