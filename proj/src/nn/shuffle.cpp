// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "ddt/nn.hpp"
#include "ddt/ops.hpp"

namespace ddt::nn {

template <typename T>
Var<T> pixel_unshuffle(Var<T> x, int r) {
  if (x.rank() != 4 || r < 1 || x.dim(2) % r != 0 || x.dim(3) % r != 0) {
    throw std::invalid_argument("pixel_unshuffle: spatial extents of " + shape_str(x.shape()) +
                                " must be divisible by factor " + std::to_string(r));
  }
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2) / r, w = x.dim(3) / r;
  auto y = ops::reshape(x, Shape{n, c, h, r, w, r});
  y = ops::permute(y, {0, 1, 3, 5, 2, 4});
  return ops::reshape(y, Shape{n, c * r * r, h, w});
}

template <typename T>
Var<T> pixel_shuffle(Var<T> x, int r) {
  if (x.rank() != 4 || r < 1 || x.dim(1) % (r * r) != 0) {
    throw std::invalid_argument("pixel_shuffle: channels of " + shape_str(x.shape()) +
                                " must be divisible by " + std::to_string(r * r));
  }
  const std::int64_t n = x.dim(0), c = x.dim(1) / (r * r), h = x.dim(2), w = x.dim(3);
  auto y = ops::reshape(x, Shape{n, c, r, r, h, w});
  y = ops::permute(y, {0, 1, 4, 2, 5, 3});
  return ops::reshape(y, Shape{n, c, h * r, w * r});
}

template Var<float> pixel_unshuffle(Var<float>, int);
template Var<double> pixel_unshuffle(Var<double>, int);
template Var<float> pixel_shuffle(Var<float>, int);
template Var<double> pixel_shuffle(Var<double>, int);

}  // namespace ddt::nn
