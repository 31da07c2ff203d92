// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "ddt/cost_model.hpp"

namespace ddt::cost {
namespace {

using attn::AttentionOp;
using blocks::BranchMode;

std::int64_t conv_params(std::int64_t in, std::int64_t out, std::int64_t k, bool bias = true, std::int64_t groups = 1) {
  return out * (in / groups) * k * k + (bias ? out : 0);
}

// Parameters of the spatial operator applied inside one branch.
std::int64_t mixer_params(const net::NetworkConfig& cfg, std::int64_t c, std::int64_t extent) {
  switch (cfg.attention) {
    case AttentionOp::kDeformable:
      return conv_params(c, c, 5, true, c) + conv_params(c, 3, 1) + 4 * conv_params(c, c, 1);
    case AttentionOp::kDense: return 4 * conv_params(c, c, 1);
    case AttentionOp::kMlpMixer: {
      const std::int64_t t = extent * extent;
      return 2 * conv_params(c, c, 1) + t * t + t;
    }
  }
  return 0;
}

// MACs of one branch over an h x w map with partitions of side `extent`.
Rational mixer_macs(const net::NetworkConfig& cfg, std::int64_t h, std::int64_t w, std::int64_t c,
                    std::int64_t extent) {
  const Rational parts = Rational(h / extent) * (w / extent);
  const Rational t = Rational(extent) * extent;
  switch (cfg.attention) {
    case AttentionOp::kDeformable: return cost_branch(CostQuery{h, w, c, extent, cfg.gamma});
    case AttentionOp::kDense: return parts * (4 * t * c * c + 2 * t * t * c);
    case AttentionOp::kMlpMixer: return parts * (2 * t * c * c + t * t * c);
  }
  return 0;
}

std::pair<std::int64_t, std::int64_t> branch_extents(const net::NetworkConfig& cfg) {
  switch (cfg.branch) {
    case BranchMode::kDual: return {cfg.p_loc, cfg.p_glob};
    case BranchMode::kLocal: return {cfg.p_loc, cfg.p_loc};
    case BranchMode::kGlobal: return {cfg.p_glob, cfg.p_glob};
  }
  return {cfg.p_loc, cfg.p_glob};
}

// Adds the rows of a stage of `blocks` transformer blocks at (h, w, c).
void add_stage(CostReport& r, const net::NetworkConfig& cfg, const std::string& name, int blocks, std::int64_t h,
               std::int64_t w, std::int64_t c) {
  if (blocks == 0) return;
  const auto [e0, e1] = branch_extents(cfg);
  const std::int64_t hidden = c * cfg.ffn_expansion;
  const Rational hw = Rational(h) * w;

  Rational attn_macs;
  if (cfg.attention == AttentionOp::kDeformable && cfg.branch == BranchMode::kDual && cfg.p_loc == cfg.p_glob) {
    attn_macs = cost_dda(CostQuery{h, w, c, cfg.p_loc, cfg.gamma}).total();
  } else {
    attn_macs = 2 * cost_conv(CostQuery{h, w, c, 1, 1}) + mixer_macs(cfg, h, w, c, e0) + mixer_macs(cfg, h, w, c, e1);
  }
  const std::int64_t attn_params =
      conv_params(c, 2 * c, 1) + conv_params(2 * c, c, 1) + mixer_params(cfg, c, e0) + mixer_params(cfg, c, e1);
  r.add(name + ".dda", blocks * attn_macs, blocks * attn_params);

  if (cfg.attention == AttentionOp::kDeformable) {
    // Bilinear taps: four per sampled value, in both branches.
    const Rational taps = 2 * 4 * hw / (cfg.gamma * cfg.gamma) * c;
    r.add(name + ".sampling", blocks * taps, 0);
  }
  const Rational ffn_macs = hw * hidden * (2 * c + 9);
  const std::int64_t ffn_params = conv_params(c, hidden, 1) + conv_params(hidden, hidden, 3, true, hidden) +
                                  conv_params(hidden, c, 1);
  r.add(name + ".dffn", blocks * ffn_macs, blocks * ffn_params);
  r.add(name + ".norm", 0, blocks * 4 * c);
}

}  // namespace

CostReport cost_network(const net::NetworkConfig& cfg, std::int64_t h, std::int64_t w) {
  cfg.validate();
  const std::int64_t m = cfg.required_multiple();
  if (h % m != 0 || w % m != 0) {
    throw std::invalid_argument("cost_network: resolution " + std::to_string(h) + "x" + std::to_string(w) +
                                " is not a multiple of " + std::to_string(m));
  }
  CostReport r;
  const std::int64_t c0 = cfg.base_channels;
  const Rational hw = Rational(h) * w;
  r.add("input_proj", hw * 3 * c0 * 9, conv_params(3, c0, 3));
  for (int level = 0; level < 3; ++level) {
    const std::int64_t c = cfg.channels(level), hl = h >> level, wl = w >> level;
    add_stage(r, cfg, "encoder" + std::to_string(level), cfg.encoder_blocks[level], hl, wl, c);
    r.add("down" + std::to_string(level), Rational(hl / 2) * (wl / 2) * 4 * c * 2 * c,
          conv_params(4 * c, 2 * c, 1, false));
  }
  add_stage(r, cfg, "bottleneck", cfg.bottleneck_blocks, h >> 3, w >> 3, cfg.channels(3));
  for (int level = 2; level >= 0; --level) {
    const std::int64_t c = cfg.channels(level), hl = h >> level, wl = w >> level;
    const std::string tag = std::to_string(level);
    r.add("up" + tag, Rational(hl / 2) * (wl / 2) * 2 * c * 4 * c, conv_params(2 * c, 4 * c, 1, false));
    if (level > 0) {
      r.add("fuse" + tag, Rational(hl) * wl * 2 * c * c, conv_params(2 * c, c, 1, false));
      add_stage(r, cfg, "decoder" + tag, cfg.decoder_blocks[2 - level], hl, wl, c);
    } else {
      add_stage(r, cfg, "decoder0", cfg.decoder_blocks[2], hl, wl, 2 * c0);
    }
  }
  add_stage(r, cfg, "refinement", cfg.refinement_blocks, h, w, 2 * c0);
  r.add("output_proj", hw * 2 * c0 * 3 * 9, conv_params(2 * c0, 3, 3));
  return r;
}

std::int64_t count_params(const net::NetworkConfig& cfg) {
  const std::int64_t m = cfg.required_multiple();
  return cost_network(cfg, m, m).total_params();
}

std::string render(const Rational& r) {
  using boost::multiprecision::cpp_int;
  const cpp_int num = boost::multiprecision::numerator(r), den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << static_cast<double>(r);
  return os.str();
}

void write_table(std::ostream& os, const CostReport& report) {
  std::size_t width = 9;
  for (const auto& c : report.components) width = std::max(width, c.name.size());
  const auto row = [&](const std::string& name, const Rational& macs, std::int64_t params) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << name << std::right << std::setw(20) << render(macs)
       << std::setw(14) << params << '\n';
  };
  os << std::left << std::setw(static_cast<int>(width) + 2) << "component" << std::right << std::setw(20) << "flops"
     << std::setw(14) << "params" << '\n';
  for (const auto& c : report.components) row(c.name, c.macs, c.params);
  row("total", report.total(), report.total_params());
  std::ostringstream g;
  g << std::fixed << std::setprecision(2) << static_cast<double>(report.total()) / 1e9 << " G (1 MAC = 1 flop), "
    << static_cast<double>(report.total_params()) / 1e6 << " M params";
  os << g.str() << '\n';
}

void write_csv(std::ostream& os, const CostReport& report) {
  os << "component,flops,params\n";
  for (const auto& c : report.components) os << c.name << ',' << render(c.macs) << ',' << c.params << '\n';
  os << "total," << render(report.total()) << ',' << report.total_params() << '\n';
}

}  // namespace ddt::cost
