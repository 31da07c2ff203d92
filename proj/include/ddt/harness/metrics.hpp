// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>

#include "ddt/tensor.hpp"

namespace ddt::harness {

// Returned by psnr() for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// 10 log10(peak^2 / MSE) after clamping both inputs to [0, peak].
double psnr(const Tensor<float>& a, const Tensor<float>& b, double peak = 1.0);

// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// valid filtering, averaged over channels (and images for 4-d input). Inputs
// are clamped to [0, peak]; both extents must be at least 11.
double ssim(const Tensor<float>& a, const Tensor<float>& b, double peak = 1.0);

}  // namespace ddt::harness
