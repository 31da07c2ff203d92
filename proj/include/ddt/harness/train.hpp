// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddt/harness/config.hpp"
#include "ddt/harness/data.hpp"
#include "ddt/network.hpp"

namespace ddt::harness {

// Raised when the loss stops being finite; a diagnostic checkpoint has been
// written to `checkpoint` by then.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::string checkpoint)
      : std::runtime_error(what), checkpoint(std::move(checkpoint)) {}
  std::string checkpoint;
};

struct MetricsRow {
  std::int64_t iteration = 0;
  double loss = 0;
  double psnr = 0;
  double ssim = 0;
  double lr = 0;
  double wall_time_s = 0;
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  std::string final_checkpoint;
};

// Loads train_dir images or generates the procedural set.
std::vector<Tensor<float>> load_training_images(const DataConfig& data);

// Trains a freshly built model and writes metrics.csv plus checkpoints into
// out_dir (created if missing). Deterministic for a given config.
template <typename T>
TrainResult train(const RunConfig& cfg, const std::vector<Tensor<float>>& images, const std::string& out_dir,
                  std::ostream* progress = nullptr);

// Same, continuing from a given model (used by tests to start from custom
// initial weights).
template <typename T>
TrainResult train_model(net::Network<T>& model, const RunConfig& cfg, const std::vector<Tensor<float>>& images,
                        const std::string& out_dir, std::ostream* progress = nullptr);

struct EvalRow {
  double sigma = 0;
  double psnr_noisy = 0, psnr_out = 0;
  double ssim_noisy = 0, ssim_out = 0;
  std::size_t images = 0;
};

// Mean metrics per sigma. Noise for image i at sigma s is seeded from
// (seed, s, i), so repeated evaluations see identical inputs.
template <typename T>
std::vector<EvalRow> evaluate(net::Network<T>& model, const std::vector<Tensor<float>>& images,
                              const std::vector<double>& sigmas, std::uint64_t seed = 2024);

void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows);

// Runs a [C, H, W] image in [0, 1] through the model (1 or 3 channels).
template <typename T>
Tensor<float> denoise_image(net::Network<T>& model, const Tensor<float>& img);

}  // namespace ddt::harness
