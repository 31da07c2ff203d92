// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <stdexcept>

#include "ddt/harness/data.hpp"

namespace ddt::harness {

Tensor<float> dihedral(const Tensor<float>& img, int k) {
  if (img.rank() != 3) throw std::invalid_argument("dihedral: expected [C, H, W], got " + shape_str(img.shape()));
  if (k < 0 || k > 7) throw std::invalid_argument("dihedral: element must be in [0, 7]");
  const std::int64_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  const bool flip = k >= 4;
  const int turns = k & 3;
  const bool swap = turns % 2 == 1;
  const std::int64_t ho = swap ? w : h, wo = swap ? h : w;
  Tensor<float> out(Shape{c, ho, wo});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t y = 0; y < ho; ++y) {
      for (std::int64_t x = 0; x < wo; ++x) {
        // Map the output pixel back through the rotation, then the flip.
        std::int64_t sy = y, sx = x;
        switch (turns) {
          case 1: sy = x; sx = w - 1 - y; break;
          case 2: sy = h - 1 - y; sx = w - 1 - x; break;
          case 3: sy = h - 1 - x; sx = y; break;
          default: break;
        }
        if (flip) sx = w - 1 - sx;
        out[(ch * ho + y) * wo + x] = img[(ch * h + sy) * w + sx];
      }
    }
  }
  return out;
}

Tensor<float> crop(const Tensor<float>& img, std::int64_t top, std::int64_t left, std::int64_t h, std::int64_t w) {
  if (img.rank() != 3 || top < 0 || left < 0 || h < 1 || w < 1 || top + h > img.dim(1) || left + w > img.dim(2)) {
    throw std::invalid_argument("crop: window out of range for " + shape_str(img.shape()));
  }
  const std::int64_t c = img.dim(0), iw = img.dim(2);
  Tensor<float> out(Shape{c, h, w});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t y = 0; y < h; ++y) {
      std::copy_n(img.ptr() + (ch * img.dim(1) + top + y) * iw + left, w, out.ptr() + (ch * h + y) * w);
    }
  }
  return out;
}

Tensor<float> stack(const std::vector<Tensor<float>>& images) {
  if (images.empty()) throw std::invalid_argument("stack: no images");
  Shape s = images.front().shape();
  Tensor<float> out([&] {
    Shape o{static_cast<std::int64_t>(images.size())};
    o.insert(o.end(), s.begin(), s.end());
    return o;
  }());
  std::size_t at = 0;
  for (const auto& img : images) {
    if (img.shape() != s) throw std::invalid_argument("stack: mismatched shapes");
    std::copy_n(img.ptr(), img.size(), out.ptr() + at);
    at += img.size();
  }
  return out;
}

}  // namespace ddt::harness
