// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/harness/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ddt/blocks.hpp"
#include "ddt/harness/optim.hpp"
#include "ddt/network.hpp"
#include "ddt/ops.hpp"

namespace ddt::harness {
namespace {

using Tensor64 = Tensor<double>;
using Var64 = Var<double>;

Tensor64 random_tensor(const Shape& s, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor64 t(s);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Reduces any output to a scalar with a fixed random weighting.
Var64 project(Var64 y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ops::sum(ops::mul(y, y.tape().constant(random_tensor(y.shape(), rng))));
}

std::vector<std::size_t> pick(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n <= k) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  return idx;
}

template <typename Module>
std::vector<Parameter<double>*> params_of(Module& m) {
  std::vector<Parameter<double>*> out;
  m.visit("m", [&](const std::string&, Parameter<double>& p) { out.push_back(&p); });
  return out;
}

}  // namespace

GradCheckReport check_gradients(const std::string& name, const LossFn& loss, std::vector<Tensor<double>> inputs,
                                const std::vector<Parameter<double>*>& params, double tolerance, std::size_t samples,
                                double eps, std::uint64_t seed) {
  const auto evaluate = [&]() {
    Tape<double> tape;
    std::vector<Var64> vars;
    for (const auto& t : inputs) vars.push_back(tape.constant(t));
    return loss(tape, vars).value()[0];
  };

  std::vector<Tensor64> input_grads;
  {
    Tape<double> tape;
    std::vector<Var64> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(t));
    tape.backward(loss(tape, vars));
    for (const auto& v : vars) input_grads.push_back(tape.grad(v));
  }
  std::vector<Tensor64> param_grads;
  for (auto* p : params) param_grads.push_back(p->grad);

  GradCheckReport r{name, 0.0, 0, tolerance};
  std::mt19937_64 rng(seed);
  const auto compare = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + eps;
    const double up = evaluate();
    slot = saved - eps;
    const double down = evaluate();
    slot = saved;
    const double numeric = (up - down) / (2 * eps);
    const double err = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    r.max_rel_err = std::max(r.max_rel_err, err);
    ++r.checked;
  };
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t i : pick(inputs[t].size(), samples, rng)) compare(inputs[t][i], input_grads[t][i]);
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i : pick(params[p]->value.size(), std::max<std::size_t>(2, samples / 4), rng)) {
      compare(params[p]->value[i], param_grads[p][i]);
    }
  }
  return r;
}

std::vector<GradCheckReport> run_gradcheck(const std::string& module, std::uint64_t seed) {
  static const std::vector<std::string> known{"ops", "nn", "attention", "blocks", "network", "all"};
  if (std::find(known.begin(), known.end(), module) == known.end()) {
    throw std::invalid_argument("gradcheck: unknown module '" + module +
                                "' (expected ops, nn, attention, blocks, network or all)");
  }
  const bool all = module == "all";
  std::mt19937_64 rng(seed);
  std::vector<GradCheckReport> out;

  if (all || module == "ops") {
    out.push_back(check_gradients(
        "matmul+softmax",
        [](Tape<double>&, const std::vector<Var64>& v) {
          return project(ops::softmax(ops::matmul(v[0], v[1]), -1), 1);
        },
        {random_tensor({2, 3, 4}, rng), random_tensor({2, 4, 5}, rng)}, {}, 1e-4));
    out.push_back(check_gradients(
        "broadcast+permute+tanh+sigmoid",
        [](Tape<double>&, const std::vector<Var64>& v) {
          const Var64 a = ops::mul(v[0], v[1]);
          return project(ops::sigmoid(ops::tanh(ops::permute(ops::add(a, v[1]), {0, 2, 1}))), 2);
        },
        {random_tensor({2, 3, 4}, rng), random_tensor({1, 3, 1}, rng)}, {}, 1e-4));
    out.push_back(check_gradients(
        "sub+scale+add_scalar+mean",
        [](Tape<double>&, const std::vector<Var64>& v) {
          const Var64 d = ops::add_scalar(ops::scale(ops::sub(v[0], v[1]), 1.7), 0.3);
          return ops::mean(ops::mul(d, d));
        },
        {random_tensor({3, 5}, rng), random_tensor({3, 5}, rng)}, {}, 1e-4));
    out.push_back(check_gradients(
        "reshape+concat+split+chunk",
        [](Tape<double>&, const std::vector<Var64>& v) {
          const Var64 cat = ops::concat<double>({v[0], ops::reshape(v[1], {2, 2, 3})}, 1);
          const auto parts = ops::split(cat, {1, 3}, 1);
          const auto halves = ops::chunk(parts[1], 3, 1);
          return project(ops::concat<double>({ops::mul(halves[0], halves[2]), parts[0], halves[1]}, 1), 8);
        },
        {random_tensor({2, 2, 3}, rng), random_tensor({2, 6}, rng)}, {}, 1e-4));
    out.push_back(check_gradients(
        "l1_loss",
        [](Tape<double>&, const std::vector<Var64>& v) { return l1_loss(v[0], v[1]); },
        {random_tensor({2, 3, 4}, rng), random_tensor({2, 3, 4}, rng)}, {}, 1e-4));
  }
  if (all || module == "nn") {
    out.push_back(check_gradients(
        "conv2d(stride 2, reflect)",
        [](Tape<double>&, const std::vector<Var64>& v) {
          return project(nn::conv2d<double>(v[0], v[1], v[2], nn::Conv2dOptions{2, 1, 1, nn::PadMode::kReflect}), 3);
        },
        {random_tensor({1, 2, 6, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)}, {}, 1e-4));
    out.push_back(check_gradients(
        "layer_norm+gelu",
        [](Tape<double>&, const std::vector<Var64>& v) { return project(nn::gelu(nn::layer_norm(v[0], v[1], v[2], 1e-5)), 4); },
        {random_tensor({2, 4, 3, 3}, rng), random_tensor({4}, rng), random_tensor({4}, rng)}, {}, 1e-4));
    // Coordinates kept away from integer pixel positions, where bilinear
    // interpolation has kinks.
    Tensor64 coords = random_tensor({1, 3, 3, 2}, rng, -0.9, 0.9);
    for (auto& c : coords.data()) {
      const double px = (c + 1) * 0.5 * 4;
      if (std::abs(px - std::round(px)) < 0.05) c += 0.06;
    }
    out.push_back(check_gradients(
        "bilinear_sample",
        [](Tape<double>&, const std::vector<Var64>& v) { return project(nn::bilinear_sample(v[0], v[1]), 5); },
        {random_tensor({1, 2, 5, 5}, rng), coords}, {}, 1e-4));
    out.push_back(check_gradients(
        "pixel_unshuffle+depthwise conv+pixel_shuffle",
        [](Tape<double>&, const std::vector<Var64>& v) {
          const Var64 down = nn::pixel_unshuffle(v[0], 2);
          const Var64 dw = nn::conv2d<double>(down, v[1], std::nullopt, nn::Conv2dOptions{1, 1, 8});
          return project(nn::pixel_shuffle(dw, 2), 9);
        },
        {random_tensor({1, 2, 4, 6}, rng), random_tensor({8, 1, 3, 3}, rng)}, {}, 1e-4));
  }
  if (all || module == "attention") {
    attn::DeformableAttention<double> da(attn::DeformAttnConfig{4, 2, 2, 0.0});
    nn::Rng init(seed);
    da.init(init);
    da.offset_proj.init(init, 0.2);
    out.push_back(check_gradients(
        "deformable_attention",
        [&](Tape<double>& tape, const std::vector<Var64>& v) { return project(da.forward(tape, v[0]), 6); },
        {random_tensor({1, 4, 4, 4}, rng)}, params_of(da), 1e-4));
  }
  if (all || module == "blocks") {
    blocks::BlockConfig bc;
    bc.channels = 4;
    bc.heads = 1;
    bc.p_loc = 4;
    bc.p_glob = 2;
    {
      blocks::DualBranchAttention<double> dda(bc);
      nn::Rng init(seed + 2);
      dda.init(init);
      out.push_back(check_gradients(
          "dda",
          [&](Tape<double>& tape, const std::vector<Var64>& v) { return project(dda.forward(tape, v[0]), 10); },
          {random_tensor({1, 4, 8, 8}, rng)}, params_of(dda), 1e-4));
      blocks::DepthwiseFFN<double> ffn(4, 4);
      ffn.init(init);
      out.push_back(check_gradients(
          "dffn",
          [&](Tape<double>& tape, const std::vector<Var64>& v) { return project(ffn.forward(tape, v[0]), 11); },
          {random_tensor({1, 4, 5, 5}, rng)}, params_of(ffn), 1e-4));
    }
    blocks::TransformerBlock<double> block(bc);
    nn::Rng init(seed);
    block.init(init);
    out.push_back(check_gradients(
        "ddtb",
        [&](Tape<double>& tape, const std::vector<Var64>& v) { return project(block.forward(tape, v[0]), 7); },
        {random_tensor({1, 4, 8, 8}, rng)}, params_of(block), 1e-4));
  }
  if (all || module == "network") {
    net::NetworkConfig cfg = net::NetworkConfig::toy();
    cfg.dtype = DType::kF64;
    net::Network<double> model = net::build<double>(cfg, seed);
    // Give the output projection weights so the loss depends on every layer.
    nn::Rng init(seed + 1);
    model.output_proj.init(init);
    std::vector<Parameter<double>*> params;
    model.visit([&](const std::string&, Parameter<double>& p) { params.push_back(&p); });
    std::shuffle(params.begin(), params.end(), rng);
    params.resize(10);
    const Tensor64 target = random_tensor({1, 3, 32, 32}, rng, 0, 1);
    out.push_back(check_gradients(
        "toy network + L1",
        [&](Tape<double>& tape, const std::vector<Var64>& v) {
          return l1_loss(model.forward(tape, v[0]), tape.constant(target));
        },
        {random_tensor({1, 3, 32, 32}, rng, 0, 1)}, params, 1e-3, 8));
  }
  return out;
}

}  // namespace ddt::harness
