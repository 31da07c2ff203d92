// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ddt/harness/metrics.hpp"

namespace ddt::harness {
namespace {

void require_same(const Tensor<float>& a, const Tensor<float>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

std::vector<double> gaussian_window() {
  std::vector<double> k(11);
  double s = 0;
  for (int i = 0; i < 11; ++i) {
    k[i] = std::exp(-((i - 5) * (i - 5)) / (2 * 1.5 * 1.5));
    s += k[i];
  }
  for (double& v : k) v /= s;
  return k;
}

// Separable valid-mode filtering of an h x w plane.
std::vector<double> filter(const std::vector<double>& img, std::int64_t h, std::int64_t w,
                           const std::vector<double>& k) {
  const std::int64_t r = static_cast<std::int64_t>(k.size()), ho = h - r + 1, wo = w - r + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h * wo)), out(static_cast<std::size_t>(ho * wo));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < wo; ++x) {
      double s = 0;
      for (std::int64_t i = 0; i < r; ++i) s += k[i] * img[y * w + x + i];
      tmp[y * wo + x] = s;
    }
  }
  for (std::int64_t y = 0; y < ho; ++y) {
    for (std::int64_t x = 0; x < wo; ++x) {
      double s = 0;
      for (std::int64_t i = 0; i < r; ++i) s += k[i] * tmp[(y + i) * wo + x];
      out[y * wo + x] = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const Tensor<float>& a, const Tensor<float>& b, double peak) {
  require_same(a, b, "psnr");
  if (a.size() == 0) throw std::invalid_argument("psnr: empty input");
  double se = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::clamp<double>(a[i], 0, peak) - std::clamp<double>(b[i], 0, peak);
    se += d * d;
  }
  if (se == 0) return kPsnrIdentical;
  return 10.0 * std::log10(peak * peak / (se / static_cast<double>(a.size())));
}

double ssim(const Tensor<float>& a, const Tensor<float>& b, double peak) {
  require_same(a, b, "ssim");
  if (a.rank() < 2) throw std::invalid_argument("ssim: expected at least 2-d input");
  const std::int64_t h = a.dim(-2), w = a.dim(-1);
  if (h < 11 || w < 11) throw std::invalid_argument("ssim: images must be at least 11x11");
  const std::int64_t planes = static_cast<std::int64_t>(a.size()) / (h * w);
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
  const auto k = gaussian_window();
  double total = 0;
  for (std::int64_t p = 0; p < planes; ++p) {
    std::vector<double> x(static_cast<std::size_t>(h * w)), y(x.size()), xx(x.size()), yy(x.size()), xy(x.size());
    for (std::int64_t i = 0; i < h * w; ++i) {
      x[i] = std::clamp<double>(a[p * h * w + i], 0, peak);
      y[i] = std::clamp<double>(b[p * h * w + i], 0, peak);
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter(x, h, w, k), my = filter(y, h, w, k);
    const auto sxx = filter(xx, h, w, k), syy = filter(yy, h, w, k), sxy = filter(xy, h, w, k);
    double acc = 0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
      acc += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(planes);
}

}  // namespace ddt::harness
