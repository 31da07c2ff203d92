// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace ddt::harness {
namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

void check_keys(const toml::table& t, const std::string& section, const std::set<std::string>& known) {
  for (const auto& [key, _] : t) {
    if (!known.count(std::string(key.str()))) fail("unknown key '" + std::string(key.str()) + "' in [" + section + "]");
  }
}

template <typename V>
void read(const toml::table& t, const std::string& section, const char* key, V& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  const std::string where = "[" + section + "]." + key;
  if constexpr (std::is_same_v<V, bool>) {
    if (!n->is_boolean()) fail(where + " must be a boolean");
    out = n->as_boolean()->get();
  } else if constexpr (std::is_same_v<V, std::string>) {
    if (!n->is_string()) fail(where + " must be a string");
    out = n->as_string()->get();
  } else if constexpr (std::is_floating_point_v<V>) {
    if (auto v = n->value<double>()) {
      out = *v;
    } else {
      fail(where + " must be a number");
    }
  } else {
    if (!n->is_integer()) fail(where + " must be an integer");
    const std::int64_t v = n->as_integer()->get();
    if constexpr (std::is_unsigned_v<V>) {
      if (v < 0) fail(where + " must be non-negative");
    }
    out = static_cast<V>(v);
  }
}

template <std::size_t N>
void read_int_array(const toml::table& t, const std::string& section, const char* key, std::array<int, N>& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  const toml::array* arr = n->as_array();
  const std::string where = "[" + section + "]." + key;
  if (!arr || arr->size() != N) fail(where + " must be an array of " + std::to_string(N) + " integers");
  for (std::size_t i = 0; i < N; ++i) {
    const auto v = (*arr)[i].value<std::int64_t>();
    if (!(*arr)[i].is_integer() || !v) fail(where + " must contain integers");
    out[i] = static_cast<int>(*v);
  }
}

void parse_network(const toml::table& t, net::NetworkConfig& c) {
  check_keys(t, "network",
             {"base_channels", "encoder_blocks", "bottleneck_blocks", "decoder_blocks", "refinement_blocks", "heads",
              "p_loc", "p_glob", "gamma", "ffn_expansion", "offset_scale", "branch", "attention", "dtype", "preset"});
  std::string preset;
  read(t, "network", "preset", preset);
  if (preset == "toy") {
    c = net::NetworkConfig::toy();
  } else if (preset == "full" || preset.empty()) {
    c = net::NetworkConfig::full();
  } else {
    fail("[network].preset must be \"full\" or \"toy\"");
  }
  read(t, "network", "base_channels", c.base_channels);
  read_int_array(t, "network", "encoder_blocks", c.encoder_blocks);
  read(t, "network", "bottleneck_blocks", c.bottleneck_blocks);
  read_int_array(t, "network", "decoder_blocks", c.decoder_blocks);
  read(t, "network", "refinement_blocks", c.refinement_blocks);
  read_int_array(t, "network", "heads", c.heads);
  read(t, "network", "p_loc", c.p_loc);
  read(t, "network", "p_glob", c.p_glob);
  read(t, "network", "gamma", c.gamma);
  read(t, "network", "ffn_expansion", c.ffn_expansion);
  read(t, "network", "offset_scale", c.offset_scale);
  std::string s;
  try {
    if (s.clear(), read(t, "network", "branch", s), !s.empty()) c.branch = blocks::branch_mode_from_string(s);
    if (s.clear(), read(t, "network", "attention", s), !s.empty()) c.attention = attn::attention_op_from_string(s);
    if (s.clear(), read(t, "network", "dtype", s), !s.empty()) c.dtype = dtype_from_string(s);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

void parse_train(const toml::table& t, TrainConfig& c) {
  check_keys(t, "train",
             {"iterations", "lr_init", "lr_final", "beta1", "beta2", "eps", "weight_decay", "batch_size",
              "patch_schedule", "augment", "seed", "sigma_min", "sigma_max", "log_every", "checkpoint_every",
              "log_wall_time"});
  read(t, "train", "iterations", c.iterations);
  read(t, "train", "lr_init", c.lr_init);
  read(t, "train", "lr_final", c.lr_final);
  read(t, "train", "beta1", c.adam.beta1);
  read(t, "train", "beta2", c.adam.beta2);
  read(t, "train", "eps", c.adam.eps);
  read(t, "train", "weight_decay", c.adam.weight_decay);
  read(t, "train", "batch_size", c.batch_size);
  read(t, "train", "augment", c.augment);
  read(t, "train", "seed", c.seed);
  read(t, "train", "sigma_min", c.sigma_min);
  read(t, "train", "sigma_max", c.sigma_max);
  read(t, "train", "log_every", c.log_every);
  read(t, "train", "checkpoint_every", c.checkpoint_every);
  read(t, "train", "log_wall_time", c.log_wall_time);
  if (const toml::node* n = t.get("patch_schedule")) {
    const toml::array* arr = n->as_array();
    if (!arr || arr->empty()) fail("[train].patch_schedule must be a non-empty array of [start, side] pairs");
    c.patch_schedule.clear();
    for (const auto& e : *arr) {
      const toml::array* pair = e.as_array();
      if (!pair || pair->size() != 2 || !(*pair)[0].is_integer() || !(*pair)[1].is_integer()) {
        fail("[train].patch_schedule entries must be [start_iteration, side] integer pairs");
      }
      c.patch_schedule.emplace_back(*(*pair)[0].value<std::int64_t>(), *(*pair)[1].value<std::int64_t>());
    }
  }
}

void parse_data(const toml::table& t, DataConfig& c) {
  check_keys(t, "data", {"train_dir", "synthetic_images", "synthetic_size", "synthetic_seed", "noise"});
  read(t, "data", "train_dir", c.train_dir);
  read(t, "data", "synthetic_images", c.synthetic_images);
  read(t, "data", "synthetic_size", c.synthetic_size);
  read(t, "data", "synthetic_seed", c.synthetic_seed);
  read(t, "data", "noise", c.noise);
}

}  // namespace

std::int64_t TrainConfig::patch_at(std::int64_t iteration) const {
  std::int64_t side = patch_schedule.front().second;
  for (const auto& [start, s] : patch_schedule) {
    if (iteration >= start) side = s;
  }
  return side;
}

void RunConfig::validate() const {
  try {
    network.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  const TrainConfig& t = train;
  if (t.iterations < 1) fail("[train].iterations must be >= 1");
  if (!(t.lr_init > 0) || !(t.lr_final >= 0) || t.lr_final > t.lr_init) fail("need 0 <= lr_final <= lr_init, lr_init > 0");
  if (!(t.adam.beta1 >= 0 && t.adam.beta1 < 1 && t.adam.beta2 >= 0 && t.adam.beta2 < 1)) fail("betas must be in [0, 1)");
  if (!(t.adam.eps > 0) || !(t.adam.weight_decay >= 0)) fail("eps must be positive and weight_decay non-negative");
  if (t.batch_size < 1) fail("[train].batch_size must be >= 1");
  if (!(t.sigma_min >= 0) || t.sigma_max < t.sigma_min) fail("need 0 <= sigma_min <= sigma_max");
  if (t.log_every < 1 || t.checkpoint_every < 0) fail("log_every must be >= 1 and checkpoint_every >= 0");
  if (t.patch_schedule.empty() || t.patch_schedule.front().first != 0) fail("patch_schedule must start at iteration 0");
  const std::int64_t m = network.required_multiple();
  for (std::size_t i = 0; i < t.patch_schedule.size(); ++i) {
    const auto [start, side] = t.patch_schedule[i];
    if (i > 0 && start <= t.patch_schedule[i - 1].first) fail("patch_schedule start iterations must increase");
    if (side < m || side % m != 0) {
      fail("patch side " + std::to_string(side) + " is not a positive multiple of " + std::to_string(m) +
           " required by the network");
    }
    if (data.train_dir.empty() && side > data.synthetic_size) {
      fail("patch side " + std::to_string(side) + " exceeds synthetic_size " + std::to_string(data.synthetic_size));
    }
  }
  if (data.train_dir.empty() && data.synthetic_images < 1) fail("[data].synthetic_images must be >= 1");
  if (data.noise != "fresh" && data.noise != "fixed") fail("[data].noise must be \"fresh\" or \"fixed\"");
}

RunConfig parse_run_config(const std::string& toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (line " << e.source().begin.line << ")";
    fail(os.str());
  }
  RunConfig c;
  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    if (k != "network" && k != "train" && k != "data") fail("unknown section or key '" + k + "'");
    if (!node.is_table()) fail("'" + k + "' must be a table");
  }
  if (const auto* t = root["network"].as_table()) parse_network(*t, c.network);
  if (const auto* t = root["train"].as_table()) parse_train(*t, c.train);
  if (const auto* t = root["data"].as_table()) parse_data(*t, c.data);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace ddt::harness
