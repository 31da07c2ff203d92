// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ddt/harness/data.hpp"

namespace ddt::harness {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ a);
  h = splitmix(h ^ b);
  return splitmix(h ^ c);
}

Tensor<float> procedural_image(std::int64_t h, std::int64_t w, std::uint64_t seed) {
  if (h < 1 || w < 1) throw std::invalid_argument("procedural_image: extents must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> img(static_cast<std::size_t>(3 * h * w));
  const auto at = [&](int c, std::int64_t y, std::int64_t x) -> double& { return img[(c * h + y) * w + x]; };

  double base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.2 + 0.6 * u(rng);
    gx[c] = 0.4 * (u(rng) - 0.5);
    gy[c] = 0.4 * (u(rng) - 0.5);
  }
  for (int c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        at(c, y, x) = base[c] + gx[c] * (static_cast<double>(x) / w - 0.5) + gy[c] * (static_cast<double>(y) / h - 0.5);
      }
    }
  }

  const int shapes = 3 + static_cast<int>(u(rng) * 4);
  for (int s = 0; s < shapes; ++s) {
    const bool disk = u(rng) < 0.5;
    const double cy = u(rng) * h, cx = u(rng) * w;
    const double ry = (0.08 + 0.25 * u(rng)) * h, rx = (0.08 + 0.25 * u(rng)) * w;
    double color[3];
    for (double& v : color) v = u(rng);
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const double dy = (y + 0.5 - cy) / ry, dx = (x + 0.5 - cx) / rx;
        const bool inside = disk ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) at(c, y, x) = color[c];
      }
    }
  }

  // Low-frequency texture shared by all channels.
  const double amp = 0.03 + 0.05 * u(rng);
  const double fx = (1 + 3 * u(rng)) * 2 * std::numbers::pi / w, fy = (1 + 3 * u(rng)) * 2 * std::numbers::pi / h;
  const double phase = 2 * std::numbers::pi * u(rng);
  for (int c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) at(c, y, x) += amp * std::sin(fx * x + fy * y + phase);
    }
  }

  Tensor<float> out(Shape{3, h, w});
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = static_cast<float>(std::clamp(img[i], 0.0, 1.0));
  return out;
}

SamplePair synth_pair(const Tensor<float>& clean, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0)) throw std::invalid_argument("synth_pair: sigma must be non-negative");
  SamplePair p{clean, clean, sigma};
  if (sigma == 0) return p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma / 255.0);
  for (auto& v : p.noisy.data()) v = static_cast<float>(v + n(rng));
  return p;
}

}  // namespace ddt::harness
