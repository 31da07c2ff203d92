// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint files. Layout (all integers little-endian):
//   8 bytes  magic "DDTCKPT\0"
//   u32      format version
//   u64      header length L
//   L bytes  JSON header: config, train state, tensor manifest, payload checksum
//   ...      raw tensor payload, tensors back to back in manifest order
// See docs/checkpoint_format.md for the header schema.

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "ddt/network.hpp"

namespace ddt::net {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointCorruptError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointShapeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct TrainState {
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
  std::string rng_state;  // textual engine state, empty if unused
  nlohmann::json extra = nlohmann::json::object();
};

// Header plus every tensor, independent of any model instance.
template <typename T>
struct CheckpointContents {
  NetworkConfig config;
  TrainState state;
  std::map<std::string, Tensor<T>> tensors;  // parameters and auxiliary state
};

// Auxiliary tensors (optimizer moments etc.) travel under their own names.
template <typename T>
void save_checkpoint(const std::string& path, Network<T>& model, const TrainState& state,
                     const std::map<std::string, const Tensor<T>*>& extra = {});

// Reads and validates a whole file. The dtype stored in the file must be T.
template <typename T>
CheckpointContents<T> read_checkpoint(const std::string& path);

// Reads the header only (config and state), e.g. to pick the dtype.
nlohmann::json read_checkpoint_header(const std::string& path);

// Copies the parameters into `model`. Every parameter must be present with
// its exact shape; nothing is modified unless all of them match.
template <typename T>
void load_parameters(const CheckpointContents<T>& ckpt, Network<T>& model);

// Builds a model with the stored config and parameters.
template <typename T>
Network<T> load_model(const std::string& path, TrainState* state = nullptr);

}  // namespace ddt::net
