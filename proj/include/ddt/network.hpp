// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// The full denoiser: 3x3 input projection, three encoder levels plus a
// bottleneck, a mirrored decoder with skip concatenation, a refinement stage
// and a residual 3x3 output projection.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddt/blocks.hpp"

namespace ddt::net {

struct NetworkConfig {
  std::int64_t base_channels = 32;
  std::array<int, 3> encoder_blocks{4, 6, 6};
  int bottleneck_blocks = 8;
  std::array<int, 3> decoder_blocks{6, 6, 4};  // deepest level first
  int refinement_blocks = 4;
  std::array<int, 4> heads{1, 2, 4, 8};
  int p_loc = 8;
  int p_glob = 8;
  int gamma = 2;
  int ffn_expansion = 4;
  double offset_scale = 0.0;
  blocks::BranchMode branch = blocks::BranchMode::kDual;
  attn::AttentionOp attention = attn::AttentionOp::kDeformable;
  DType dtype = DType::kF32;

  static NetworkConfig full();
  static NetworkConfig toy();

  void validate() const;
  std::int64_t channels(int level) const { return base_channels << level; }
  // Input extents must be multiples of this (8 * lcm(p_loc, p_glob)).
  std::int64_t required_multiple() const;
  blocks::BlockConfig block_config(std::int64_t channels, int heads) const;

  nlohmann::json to_json() const;
  static NetworkConfig from_json(const nlohmann::json& j);
  bool operator==(const NetworkConfig&) const = default;
};

// Feature shapes observed during one forward pass.
struct ForwardTrace {
  std::vector<Shape> encoder;      // level 0..2 block outputs
  Shape bottleneck;
  std::vector<Shape> skip_concat;  // level 2, 1, 0 after concatenation
  std::vector<Shape> decoder;      // level 2, 1, 0 block outputs
  Shape refinement;
};

template <typename T>
class Network {
 public:
  explicit Network(const NetworkConfig& cfg);

  // Deterministic initialization from `seed`.
  void init(std::uint64_t seed);

  // I_out = I_in + R(I_in). Extents must be multiples of required_multiple().
  Var<T> forward(Tape<T>& tape, Var<T> input, ForwardTrace* trace = nullptr);

  void visit(const ParamVisitor<T>& fn);
  std::int64_t parameter_count() const;
  const NetworkConfig& config() const { return cfg_; }

  nn::Conv2d<T> input_proj;
  std::array<std::vector<blocks::TransformerBlock<T>>, 3> encoders;
  std::array<nn::Conv2d<T>, 3> downs;
  std::vector<blocks::TransformerBlock<T>> bottleneck;
  std::array<nn::Conv2d<T>, 3> ups;   // indexed by target level
  std::array<nn::Conv2d<T>, 2> fuses; // levels 1 and 2
  std::array<std::vector<blocks::TransformerBlock<T>>, 3> decoders;  // indexed by level
  std::vector<blocks::TransformerBlock<T>> refinement;
  nn::Conv2d<T> output_proj;

 private:
  NetworkConfig cfg_;
};

template <typename T>
Network<T> build(const NetworkConfig& cfg, std::uint64_t seed);

// Runs the model on [N, 3, H, W] of any size: reflect-pads up to the required
// multiple, evaluates on a private tape and crops back.
template <typename T>
Tensor<T> infer(Network<T>& model, const Tensor<T>& input);

// Mirror-padding index map valid for any overshoot (period 2n - 2).
std::int64_t reflect_index(std::int64_t i, std::int64_t n);

template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& x, std::int64_t pad_bottom, std::int64_t pad_right);

}  // namespace ddt::net
