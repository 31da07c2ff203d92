// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Patch partitions and the transformer block: dual-branch deformable
// attention (DDA), the depthwise feed-forward network (DFFN) and the residual
// block that chains them.

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "ddt/attention.hpp"
#include "ddt/layers.hpp"

namespace ddt::blocks {

// [N, C, H, W] -> [N*HW/p^2, C, p, p]; patch (i, j) of image n lands at index
// (n*(H/p) + i)*(W/p) + j.
template <typename T>
Var<T> partition_local(Var<T> x, int p);
template <typename T>
Var<T> unpartition_local(Var<T> patches, int p, std::int64_t h, std::int64_t w);

// [N, C, H, W] -> [N*HW/g^2, C, g, g]. Group (r, s) collects the pixels at
// offset (r, s) inside each of the g x g patches of size (H/g, W/g).
template <typename T>
Var<T> partition_global(Var<T> x, int g);
template <typename T>
Var<T> unpartition_global(Var<T> groups, int g, std::int64_t h, std::int64_t w);

enum class BranchMode { kDual, kLocal, kGlobal };

std::string to_string(BranchMode m);
BranchMode branch_mode_from_string(const std::string& name);

struct BlockConfig {
  std::int64_t channels = 32;
  int heads = 1;
  int p_loc = 8;    // local patch side in pixels
  int p_glob = 8;   // patches per side for the global branch
  int gamma = 2;
  int ffn_expansion = 4;
  double offset_scale = 0.0;  // 0 selects gamma
  BranchMode branch = BranchMode::kDual;
  attn::AttentionOp attention = attn::AttentionOp::kDeformable;

  void validate() const;
  // Throws unless an h x w feature map can be partitioned by both branches.
  void check_extent(std::int64_t h, std::int64_t w) const;
  attn::DeformAttnConfig attention_config() const;
};

enum class PartitionKind { kLocal, kGlobal };

// One branch: partition, spatial mixer per partition, unpartition.
template <typename T>
class Branch {
 public:
  Branch(PartitionKind kind, const BlockConfig& cfg);

  Var<T> forward(Tape<T>& tape, Var<T> x);
  void init(nn::Rng& rng) { mixer_->init(rng); }
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) { mixer_->visit(prefix, fn); }
  std::int64_t parameter_count() const { return mixer_->parameter_count(); }

  PartitionKind kind() const { return kind_; }
  attn::SpatialMixer<T>& mixer() { return *mixer_; }

 private:
  PartitionKind kind_;
  int size_;
  std::unique_ptr<attn::SpatialMixer<T>> mixer_;
};

// 1x1 expand C -> 2C, one branch per C-channel group, concat, 1x1 fuse 2C -> C.
template <typename T>
class DualBranchAttention {
 public:
  explicit DualBranchAttention(const BlockConfig& cfg);

  Var<T> forward(Tape<T>& tape, Var<T> x);
  void init(nn::Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);
  std::int64_t parameter_count() const;

  nn::Conv2d<T> expand;
  Branch<T> first;
  Branch<T> second;
  nn::Conv2d<T> fuse;

 private:
  BlockConfig cfg_;
};

// 1x1 C -> eC, 3x3 depthwise, GELU, 1x1 eC -> C.
template <typename T>
class DepthwiseFFN {
 public:
  DepthwiseFFN(std::int64_t channels, int expansion);

  Var<T> forward(Tape<T>& tape, Var<T> x);
  void init(nn::Rng& rng, bool zero_output = false);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);
  std::int64_t parameter_count() const;

  nn::Conv2d<T> project_in;
  nn::Conv2d<T> depthwise;
  nn::Conv2d<T> project_out;
};

// x' = x + DDA(LN(x)); out = x' + DFFN(LN(x')).
template <typename T>
class TransformerBlock {
 public:
  explicit TransformerBlock(const BlockConfig& cfg);

  Var<T> forward(Tape<T>& tape, Var<T> x);
  void init(nn::Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor<T>& fn);
  std::int64_t parameter_count() const;

  const BlockConfig& config() const { return cfg_; }

  nn::LayerNorm2d<T> norm1;
  DualBranchAttention<T> attention;
  nn::LayerNorm2d<T> norm2;
  DepthwiseFFN<T> ffn;

 private:
  BlockConfig cfg_;
};

}  // namespace ddt::blocks
