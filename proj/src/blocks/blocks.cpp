// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "ddt/blocks.hpp"
#include "ddt/ops.hpp"

namespace ddt::blocks {

std::string to_string(BranchMode m) {
  switch (m) {
    case BranchMode::kDual: return "dual";
    case BranchMode::kLocal: return "local";
    case BranchMode::kGlobal: return "global";
  }
  return "?";
}

BranchMode branch_mode_from_string(const std::string& name) {
  if (name == "dual") return BranchMode::kDual;
  if (name == "local") return BranchMode::kLocal;
  if (name == "global") return BranchMode::kGlobal;
  throw std::invalid_argument("unknown branch mode '" + name + "' (expected dual, local or global)");
}

void BlockConfig::validate() const {
  attention_config().validate();
  if (p_loc < 1 || p_glob < 1) throw std::invalid_argument("block: p_loc and p_glob must be positive");
  if (ffn_expansion < 1) throw std::invalid_argument("block: ffn_expansion must be >= 1");
  if (attention == attn::AttentionOp::kDeformable && (p_loc % gamma != 0 || p_glob % gamma != 0)) {
    throw std::invalid_argument("block: p_loc " + std::to_string(p_loc) + " and p_glob " + std::to_string(p_glob) +
                                " must be divisible by gamma " + std::to_string(gamma));
  }
}

void BlockConfig::check_extent(std::int64_t h, std::int64_t w) const {
  for (int p : {p_loc, p_glob}) {
    if (h % p != 0 || w % p != 0) {
      throw std::invalid_argument("block: feature map " + std::to_string(h) + "x" + std::to_string(w) +
                                  " not divisible by patch parameters p_loc=" + std::to_string(p_loc) +
                                  ", p_glob=" + std::to_string(p_glob));
    }
  }
}

attn::DeformAttnConfig BlockConfig::attention_config() const {
  return attn::DeformAttnConfig{channels, heads, gamma, offset_scale};
}

template <typename T>
Branch<T>::Branch(PartitionKind kind, const BlockConfig& cfg)
    : kind_(kind),
      size_(kind == PartitionKind::kLocal ? cfg.p_loc : cfg.p_glob),
      mixer_(attn::make_mixer<T>(cfg.attention, cfg.attention_config(), size_)) {}

template <typename T>
Var<T> Branch<T>::forward(Tape<T>& tape, Var<T> x) {
  const std::int64_t h = x.dim(2), w = x.dim(3);
  if (kind_ == PartitionKind::kLocal) {
    return unpartition_local(mixer_->forward(tape, partition_local(x, size_)), size_, h, w);
  }
  return unpartition_global(mixer_->forward(tape, partition_global(x, size_)), size_, h, w);
}

namespace {

PartitionKind first_kind(BranchMode m) { return m == BranchMode::kGlobal ? PartitionKind::kGlobal : PartitionKind::kLocal; }
PartitionKind second_kind(BranchMode m) { return m == BranchMode::kLocal ? PartitionKind::kLocal : PartitionKind::kGlobal; }

}  // namespace

template <typename T>
DualBranchAttention<T>::DualBranchAttention(const BlockConfig& cfg)
    : expand(cfg.channels, 2 * cfg.channels, 1),
      first(first_kind(cfg.branch), cfg),
      second(second_kind(cfg.branch), cfg),
      fuse(2 * cfg.channels, cfg.channels, 1),
      cfg_(cfg) {
  cfg_.validate();
}

template <typename T>
Var<T> DualBranchAttention<T>::forward(Tape<T>& tape, Var<T> x) {
  if (x.rank() != 4 || x.dim(1) != cfg_.channels) {
    throw std::invalid_argument("DDA: expected [N, " + std::to_string(cfg_.channels) + ", H, W], got " +
                                shape_str(x.shape()));
  }
  cfg_.check_extent(x.dim(2), x.dim(3));
  const auto groups = ops::chunk(expand.forward(tape, x), 2, 1);
  const Var<T> a = first.forward(tape, groups[0]);
  const Var<T> b = second.forward(tape, groups[1]);
  return fuse.forward(tape, ops::concat<T>({a, b}, 1));
}

template <typename T>
void DualBranchAttention<T>::init(nn::Rng& rng) {
  expand.init(rng);
  first.init(rng);
  second.init(rng);
  fuse.init(rng);
}

template <typename T>
void DualBranchAttention<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  expand.visit(prefix + ".expand", fn);
  first.visit(prefix + ".branch0", fn);
  second.visit(prefix + ".branch1", fn);
  fuse.visit(prefix + ".fuse", fn);
}

template <typename T>
std::int64_t DualBranchAttention<T>::parameter_count() const {
  return expand.parameter_count() + first.parameter_count() + second.parameter_count() + fuse.parameter_count();
}

template <typename T>
DepthwiseFFN<T>::DepthwiseFFN(std::int64_t channels, int expansion)
    : project_in(channels, channels * expansion, 1),
      depthwise(channels * expansion, channels * expansion, 3,
                nn::Conv2dOptions{1, 1, static_cast<int>(channels * expansion)}),
      project_out(channels * expansion, channels, 1) {}

template <typename T>
Var<T> DepthwiseFFN<T>::forward(Tape<T>& tape, Var<T> x) {
  return project_out.forward(tape, nn::gelu(depthwise.forward(tape, project_in.forward(tape, x))));
}

template <typename T>
void DepthwiseFFN<T>::init(nn::Rng& rng, bool zero_output) {
  project_in.init(rng);
  depthwise.init(rng);
  if (zero_output) {
    project_out.zero();
  } else {
    project_out.init(rng);
  }
}

template <typename T>
void DepthwiseFFN<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  project_in.visit(prefix + ".in", fn);
  depthwise.visit(prefix + ".dw", fn);
  project_out.visit(prefix + ".out", fn);
}

template <typename T>
std::int64_t DepthwiseFFN<T>::parameter_count() const {
  return project_in.parameter_count() + depthwise.parameter_count() + project_out.parameter_count();
}

template <typename T>
TransformerBlock<T>::TransformerBlock(const BlockConfig& cfg)
    : norm1(cfg.channels), attention(cfg), norm2(cfg.channels), ffn(cfg.channels, cfg.ffn_expansion), cfg_(cfg) {}

template <typename T>
Var<T> TransformerBlock<T>::forward(Tape<T>& tape, Var<T> x) {
  const Var<T> mid = ops::add(attention.forward(tape, norm1.forward(tape, x)), x);
  return ops::add(ffn.forward(tape, norm2.forward(tape, mid)), mid);
}

template <typename T>
void TransformerBlock<T>::init(nn::Rng& rng) {
  attention.init(rng);
  ffn.init(rng);
}

template <typename T>
void TransformerBlock<T>::visit(const std::string& prefix, const ParamVisitor<T>& fn) {
  norm1.visit(prefix + ".norm1", fn);
  attention.visit(prefix + ".attn", fn);
  norm2.visit(prefix + ".norm2", fn);
  ffn.visit(prefix + ".ffn", fn);
}

template <typename T>
std::int64_t TransformerBlock<T>::parameter_count() const {
  return norm1.parameter_count() + attention.parameter_count() + norm2.parameter_count() + ffn.parameter_count();
}

template class Branch<float>;
template class Branch<double>;
template class DualBranchAttention<float>;
template class DualBranchAttention<double>;
template class DepthwiseFFN<float>;
template class DepthwiseFFN<double>;
template class TransformerBlock<float>;
template class TransformerBlock<double>;

}  // namespace ddt::blocks
