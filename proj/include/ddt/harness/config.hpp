// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration read from TOML files with [network], [train] and [data]
// tables. Every field has a default; unknown keys are rejected.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddt/harness/optim.hpp"
#include "ddt/network.hpp"

namespace ddt::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::int64_t iterations = 300000;
  double lr_init = 3e-4;
  double lr_final = 1e-6;
  AdamWConfig adam{};
  int batch_size = 4;
  // (start iteration, crop side); the first entry must start at 0.
  std::vector<std::pair<std::int64_t, std::int64_t>> patch_schedule{{0, 128}, {150000, 256}};
  bool augment = true;
  std::uint64_t seed = 0;
  double sigma_min = 0;
  double sigma_max = 50;
  std::int64_t log_every = 100;
  std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
  bool log_wall_time = true;

  std::int64_t patch_at(std::int64_t iteration) const;
};

struct DataConfig {
  std::string train_dir;            // optional directory of PNM images
  int synthetic_images = 32;        // procedural images when train_dir is empty
  std::int64_t synthetic_size = 256;
  std::uint64_t synthetic_seed = 1;
  // "fresh": new noise every draw; "fixed": one noisy copy per image, drawn once.
  std::string noise = "fresh";
};

struct RunConfig {
  net::NetworkConfig network = net::NetworkConfig::full();
  TrainConfig train{};
  DataConfig data{};

  // Checks every invariant, including crop sides against the network's
  // divisibility requirement. Throws ConfigError.
  void validate() const;
};

RunConfig parse_run_config(const std::string& toml_text);
RunConfig load_run_config(const std::string& path);

}  // namespace ddt::harness
