// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <numeric>
#include <set>
#include <stdexcept>

#include "ddt/network.hpp"

namespace ddt::net {

NetworkConfig NetworkConfig::full() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::toy() {
  NetworkConfig c;
  c.base_channels = 8;
  c.encoder_blocks = {1, 1, 1};
  c.bottleneck_blocks = 1;
  c.decoder_blocks = {1, 1, 1};
  c.refinement_blocks = 1;
  c.heads = {1, 1, 2, 2};
  c.p_loc = 4;
  c.p_glob = 4;
  return c;
}

void NetworkConfig::validate() const {
  if (base_channels < 1) throw std::invalid_argument("network: base_channels must be positive");
  for (int b : encoder_blocks) {
    if (b < 0) throw std::invalid_argument("network: negative encoder block count");
  }
  for (int b : decoder_blocks) {
    if (b < 0) throw std::invalid_argument("network: negative decoder block count");
  }
  if (bottleneck_blocks < 0 || refinement_blocks < 0) throw std::invalid_argument("network: negative block count");
  for (int level = 0; level < 4; ++level) {
    if (heads[level] < 1 || channels(level) % heads[level] != 0) {
      throw std::invalid_argument("network: heads[" + std::to_string(level) + "]=" + std::to_string(heads[level]) +
                                  " does not divide " + std::to_string(channels(level)) + " channels");
    }
    block_config(channels(level), heads[level]).validate();
  }
}

std::int64_t NetworkConfig::required_multiple() const { return 8 * std::lcm<std::int64_t>(p_loc, p_glob); }

blocks::BlockConfig NetworkConfig::block_config(std::int64_t ch, int h) const {
  blocks::BlockConfig b;
  b.channels = ch;
  b.heads = h;
  b.p_loc = p_loc;
  b.p_glob = p_glob;
  b.gamma = gamma;
  b.ffn_expansion = ffn_expansion;
  b.offset_scale = offset_scale;
  b.branch = branch;
  b.attention = attention;
  return b;
}

nlohmann::json NetworkConfig::to_json() const {
  return nlohmann::json{{"base_channels", base_channels},
                        {"encoder_blocks", encoder_blocks},
                        {"bottleneck_blocks", bottleneck_blocks},
                        {"decoder_blocks", decoder_blocks},
                        {"refinement_blocks", refinement_blocks},
                        {"heads", heads},
                        {"p_loc", p_loc},
                        {"p_glob", p_glob},
                        {"gamma", gamma},
                        {"ffn_expansion", ffn_expansion},
                        {"offset_scale", offset_scale},
                        {"branch", blocks::to_string(branch)},
                        {"attention", attn::to_string(attention)},
                        {"dtype", to_string(dtype)}};
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"base_channels", "encoder_blocks", "bottleneck_blocks", "decoder_blocks",
                                           "refinement_blocks", "heads", "p_loc", "p_glob", "gamma",
                                           "ffn_expansion", "offset_scale", "branch", "attention", "dtype"};
  if (!j.is_object()) throw std::invalid_argument("network config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("network config: unknown key '" + key + "'");
  }
  NetworkConfig c;
  try {
    if (j.contains("base_channels")) c.base_channels = j.at("base_channels").get<std::int64_t>();
    if (j.contains("encoder_blocks")) c.encoder_blocks = j.at("encoder_blocks").get<std::array<int, 3>>();
    if (j.contains("bottleneck_blocks")) c.bottleneck_blocks = j.at("bottleneck_blocks").get<int>();
    if (j.contains("decoder_blocks")) c.decoder_blocks = j.at("decoder_blocks").get<std::array<int, 3>>();
    if (j.contains("refinement_blocks")) c.refinement_blocks = j.at("refinement_blocks").get<int>();
    if (j.contains("heads")) c.heads = j.at("heads").get<std::array<int, 4>>();
    if (j.contains("p_loc")) c.p_loc = j.at("p_loc").get<int>();
    if (j.contains("p_glob")) c.p_glob = j.at("p_glob").get<int>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<int>();
    if (j.contains("ffn_expansion")) c.ffn_expansion = j.at("ffn_expansion").get<int>();
    if (j.contains("offset_scale")) c.offset_scale = j.at("offset_scale").get<double>();
    if (j.contains("branch")) c.branch = blocks::branch_mode_from_string(j.at("branch").get<std::string>());
    if (j.contains("attention")) c.attention = attn::attention_op_from_string(j.at("attention").get<std::string>());
    if (j.contains("dtype")) c.dtype = dtype_from_string(j.at("dtype").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("network config: ") + e.what());
  }
  return c;
}

}  // namespace ddt::net
