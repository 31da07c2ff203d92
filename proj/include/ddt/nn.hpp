// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable neural-network kernels on NCHW tensors.

#pragma once

#include <optional>

#include "ddt/autodiff.hpp"

namespace ddt::nn {

enum class PadMode { kZero, kReflect };

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int groups = 1;
  PadMode pad_mode = PadMode::kZero;
};

// Cross-correlation. x: [N, C_in, H, W], weight: [C_out, C_in/groups, kh, kw],
// bias: [C_out]. Output extent per axis is floor((H + 2*pad - k)/stride) + 1.
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, std::optional<Var<T>> bias, const Conv2dOptions& opts);

// Normalizes every pixel across the channel axis, then applies a per-channel
// affine map. gamma, beta: [C].
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps);

// Exact (erf) Gaussian error linear unit.
template <typename T>
Var<T> gelu(Var<T> x);

// Samples x at normalized coordinates. coords: [N, Hg, Wg, 2] holding (x, y)
// pairs in [-1, 1], where -1 and +1 are the centers of the border pixels.
// Out-of-range coordinates are clamped to the border (zero gradient there).
// Returns [N, C, Hg, Wg].
template <typename T>
Var<T> bilinear_sample(Var<T> x, Var<T> coords);

// [N, C, H, W] -> [N, C*r*r, H/r, W/r]; channel c*r*r + dy*r + dx holds x[c, i*r+dy, j*r+dx].
template <typename T>
Var<T> pixel_unshuffle(Var<T> x, int r);
// Inverse of pixel_unshuffle.
template <typename T>
Var<T> pixel_shuffle(Var<T> x, int r);

// Pixel-space coordinate of a normalized coordinate on an axis of `extent` samples.
template <typename T>
T unnormalize_coord(T u, std::int64_t extent);
template <typename T>
T normalize_coord(T pixel, std::int64_t extent);

}  // namespace ddt::nn
