// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <stdexcept>

#include "ddt/network.hpp"
#include "ddt/ops.hpp"

namespace ddt::net {
namespace {

template <typename T>
std::vector<blocks::TransformerBlock<T>> make_stage(const NetworkConfig& cfg, int count, std::int64_t channels,
                                                    int heads) {
  std::vector<blocks::TransformerBlock<T>> stage;
  stage.reserve(count);
  for (int i = 0; i < count; ++i) stage.emplace_back(cfg.block_config(channels, heads));
  return stage;
}

template <typename T>
Var<T> run_stage(Tape<T>& tape, std::vector<blocks::TransformerBlock<T>>& stage, Var<T> x) {
  for (auto& block : stage) x = block.forward(tape, x);
  return x;
}

template <typename T>
void visit_stage(std::vector<blocks::TransformerBlock<T>>& stage, const std::string& prefix,
                 const ParamVisitor<T>& fn) {
  for (std::size_t i = 0; i < stage.size(); ++i) stage[i].visit(prefix + "." + std::to_string(i), fn);
}

template <typename T>
std::int64_t count_stage(const std::vector<blocks::TransformerBlock<T>>& stage) {
  std::int64_t n = 0;
  for (const auto& block : stage) n += block.parameter_count();
  return n;
}

}  // namespace

template <typename T>
Network<T>::Network(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::int64_t c0 = cfg.base_channels;
  input_proj = nn::Conv2d<T>(3, c0, 3, nn::Conv2dOptions{1, 1});
  for (int level = 0; level < 3; ++level) {
    const std::int64_t c = cfg.channels(level);
    encoders[level] = make_stage<T>(cfg, cfg.encoder_blocks[level], c, cfg.heads[level]);
    downs[level] = nn::Conv2d<T>(4 * c, 2 * c, 1, {}, false);
    ups[level] = nn::Conv2d<T>(2 * c, 4 * c, 1, {}, false);
  }
  bottleneck = make_stage<T>(cfg, cfg.bottleneck_blocks, cfg.channels(3), cfg.heads[3]);
  for (int level = 1; level < 3; ++level) {
    const std::int64_t c = cfg.channels(level);
    fuses[level - 1] = nn::Conv2d<T>(2 * c, c, 1, {}, false);
    decoders[level] = make_stage<T>(cfg, cfg.decoder_blocks[2 - level], c, cfg.heads[level]);
  }
  decoders[0] = make_stage<T>(cfg, cfg.decoder_blocks[2], 2 * c0, cfg.heads[0]);
  refinement = make_stage<T>(cfg, cfg.refinement_blocks, 2 * c0, cfg.heads[0]);
  output_proj = nn::Conv2d<T>(2 * c0, 3, 3, nn::Conv2dOptions{1, 1});
}

template <typename T>
void Network<T>::init(std::uint64_t seed) {
  nn::Rng rng(seed);
  input_proj.init(rng);
  for (int level = 0; level < 3; ++level) {
    for (auto& b : encoders[level]) b.init(rng);
    downs[level].init(rng);
  }
  for (auto& b : bottleneck) b.init(rng);
  for (int level = 2; level >= 0; --level) {
    ups[level].init(rng);
    if (level > 0) fuses[level - 1].init(rng);
    for (auto& b : decoders[level]) b.init(rng);
  }
  for (auto& b : refinement) b.init(rng);
  output_proj.zero();
}

template <typename T>
Var<T> Network<T>::forward(Tape<T>& tape, Var<T> input, ForwardTrace* trace) {
  if (input.rank() != 4 || input.dim(1) != 3) {
    throw std::invalid_argument("network: expected [N, 3, H, W] input, got " + shape_str(input.shape()));
  }
  const std::int64_t m = cfg_.required_multiple();
  if (input.dim(2) % m != 0 || input.dim(3) % m != 0) {
    throw std::invalid_argument("network: input " + std::to_string(input.dim(2)) + "x" + std::to_string(input.dim(3)) +
                                " must be a multiple of " + std::to_string(m) +
                                " per side; pad the image first (see infer())");
  }
  if (trace) *trace = ForwardTrace{};

  std::array<Var<T>, 3> skips;
  Var<T> x = input_proj.forward(tape, input);
  for (int level = 0; level < 3; ++level) {
    x = run_stage(tape, encoders[level], x);
    skips[level] = x;
    if (trace) trace->encoder.push_back(x.shape());
    x = downs[level].forward(tape, nn::pixel_unshuffle(x, 2));
  }
  x = run_stage(tape, bottleneck, x);
  if (trace) trace->bottleneck = x.shape();

  for (int level = 2; level >= 0; --level) {
    x = nn::pixel_shuffle(ups[level].forward(tape, x), 2);
    x = ops::concat<T>({x, skips[level]}, 1);
    if (trace) trace->skip_concat.push_back(x.shape());
    if (level > 0) x = fuses[level - 1].forward(tape, x);
    x = run_stage(tape, decoders[level], x);
    if (trace) trace->decoder.push_back(x.shape());
  }
  x = run_stage(tape, refinement, x);
  if (trace) trace->refinement = x.shape();
  return ops::add(input, output_proj.forward(tape, x));
}

template <typename T>
void Network<T>::visit(const ParamVisitor<T>& fn) {
  input_proj.visit("input_proj", fn);
  for (int level = 0; level < 3; ++level) {
    visit_stage(encoders[level], "encoder" + std::to_string(level), fn);
    downs[level].visit("down" + std::to_string(level), fn);
  }
  visit_stage(bottleneck, "bottleneck", fn);
  for (int level = 2; level >= 0; --level) {
    ups[level].visit("up" + std::to_string(level), fn);
    if (level > 0) fuses[level - 1].visit("fuse" + std::to_string(level), fn);
    visit_stage(decoders[level], "decoder" + std::to_string(level), fn);
  }
  visit_stage(refinement, "refinement", fn);
  output_proj.visit("output_proj", fn);
}

template <typename T>
std::int64_t Network<T>::parameter_count() const {
  std::int64_t n = input_proj.parameter_count() + output_proj.parameter_count() + count_stage(bottleneck) +
                   count_stage(refinement);
  for (int level = 0; level < 3; ++level) {
    n += count_stage(encoders[level]) + count_stage(decoders[level]) + downs[level].parameter_count() +
         ups[level].parameter_count();
  }
  for (const auto& f : fuses) n += f.parameter_count();
  return n;
}

template <typename T>
Network<T> build(const NetworkConfig& cfg, std::uint64_t seed) {
  Network<T> model(cfg);
  model.init(seed);
  return model;
}

std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * n - 2;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& x, std::int64_t pad_bottom, std::int64_t pad_right) {
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t ho = h + pad_bottom, wo = w + pad_right;
  Tensor<T> out(Shape{n, c, ho, wo});
  for (std::int64_t p = 0; p < n * c; ++p) {
    const T* src = x.ptr() + p * h * w;
    T* dst = out.ptr() + p * ho * wo;
    for (std::int64_t y = 0; y < ho; ++y) {
      const std::int64_t sy = reflect_index(y, h);
      for (std::int64_t xx = 0; xx < wo; ++xx) dst[y * wo + xx] = src[sy * w + reflect_index(xx, w)];
    }
  }
  return out;
}

template <typename T>
Tensor<T> infer(Network<T>& model, const Tensor<T>& input) {
  if (input.rank() != 4 || input.dim(1) != 3) {
    throw std::invalid_argument("infer: expected [N, 3, H, W], got " + shape_str(input.shape()));
  }
  const std::int64_t m = model.config().required_multiple();
  const std::int64_t h = input.dim(2), w = input.dim(3);
  const std::int64_t hp = (h + m - 1) / m * m, wp = (w + m - 1) / m * m;
  Tape<T> tape;
  const Var<T> out = model.forward(tape, tape.constant(reflect_pad(input, hp - h, wp - w)));
  if (hp == h && wp == w) return out.value();
  const Tensor<T>& full = out.value();
  Tensor<T> cropped(input.shape());
  for (std::int64_t p = 0; p < input.dim(0) * 3; ++p) {
    for (std::int64_t y = 0; y < h; ++y) {
      std::copy_n(full.ptr() + (p * hp + y) * wp, w, cropped.ptr() + (p * h + y) * w);
    }
  }
  return cropped;
}

template class Network<float>;
template class Network<double>;
template Network<float> build<float>(const NetworkConfig&, std::uint64_t);
template Network<double> build<double>(const NetworkConfig&, std::uint64_t);
template Tensor<float> infer<float>(Network<float>&, const Tensor<float>&);
template Tensor<double> infer<double>(Network<double>&, const Tensor<double>&);
template Tensor<float> reflect_pad<float>(const Tensor<float>&, std::int64_t, std::int64_t);
template Tensor<double> reflect_pad<double>(const Tensor<double>&, std::int64_t, std::int64_t);

}  // namespace ddt::net
