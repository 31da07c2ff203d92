// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ddt/flops.hpp"
#include "ddt/nn.hpp"

namespace ddt::nn {

template <typename T>
T unnormalize_coord(T u, std::int64_t extent) {
  if (extent <= 1) return T(0);
  const T clamped = std::clamp(u, T(-1), T(1));
  const T px = (clamped + T(1)) * T(0.5) * static_cast<T>(extent - 1);
  // Coordinates produced by normalize_coord() from integer pixels land back on the lattice.
  const T nearest = std::round(px);
  const T tol = T(16) * std::numeric_limits<T>::epsilon() * static_cast<T>(extent);
  return std::abs(px - nearest) <= tol ? nearest : px;
}

template <typename T>
T normalize_coord(T pixel, std::int64_t extent) {
  if (extent <= 1) return T(0);
  return T(2) * pixel / static_cast<T>(extent - 1) - T(1);
}

namespace {

template <typename T>
struct Tap {
  std::int64_t x0, x1, y0, y1;
  T wx, wy;
  bool inside_x, inside_y;  // coordinate not clamped
};

template <typename T>
Tap<T> make_tap(T u, T v, std::int64_t h, std::int64_t w) {
  Tap<T> t{};
  t.inside_x = u >= T(-1) && u <= T(1);
  t.inside_y = v >= T(-1) && v <= T(1);
  const T px = unnormalize_coord(u, w);
  const T py = unnormalize_coord(v, h);
  t.x0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(px)), w - 1);
  t.y0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(py)), h - 1);
  t.x1 = std::min<std::int64_t>(t.x0 + 1, w - 1);
  t.y1 = std::min<std::int64_t>(t.y0 + 1, h - 1);
  t.wx = px - static_cast<T>(t.x0);
  t.wy = py - static_cast<T>(t.y0);
  return t;
}

}  // namespace

template <typename T>
Var<T> bilinear_sample(Var<T> x, Var<T> coords) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& cv = coords.value();
  if (xv.rank() != 4 || cv.rank() != 4 || cv.dim(3) != 2 || cv.dim(0) != xv.dim(0)) {
    throw std::invalid_argument("bilinear_sample: expected x [N,C,H,W] and coords [N,Hg,Wg,2], got " +
                                shape_str(xv.shape()) + " and " + shape_str(cv.shape()));
  }
  const std::int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::int64_t hg = cv.dim(1), wg = cv.dim(2), pts = hg * wg;
  Tensor<T> out(Shape{n, c, hg, wg});
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t q = 0; q < pts; ++q) {
      const T* cq = cv.ptr() + (b * pts + q) * 2;
      const Tap<T> t = make_tap(cq[0], cq[1], h, w);
      const T w00 = (T(1) - t.wy) * (T(1) - t.wx), w01 = (T(1) - t.wy) * t.wx;
      const T w10 = t.wy * (T(1) - t.wx), w11 = t.wy * t.wx;
      const std::int64_t o00 = t.y0 * w + t.x0, o01 = t.y0 * w + t.x1;
      const std::int64_t o10 = t.y1 * w + t.x0, o11 = t.y1 * w + t.x1;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const T* plane = xv.ptr() + (b * c + ch) * h * w;
        out[(b * c + ch) * pts + q] = w00 * plane[o00] + w01 * plane[o01] + w10 * plane[o10] + w11 * plane[o11];
      }
    }
  }
  count_macs(static_cast<std::uint64_t>(4 * n * c * pts));

  const std::size_t xi = x.id(), ci = coords.id();
  return x.tape().record(
      "bilinear_sample", std::move(out), {x, coords},
      [xi, ci, n, c, h, w, pts](Tape<T>& tape, std::size_t self) {
        const Tensor<T>& g = tape.grad_of(self);
        const Tensor<T>& xv = tape.value(xi);
        const Tensor<T>& cv = tape.value(ci);
        T* gx = tape.requires_grad(xi) ? tape.grad_buffer(xi).ptr() : nullptr;
        T* gc = tape.requires_grad(ci) ? tape.grad_buffer(ci).ptr() : nullptr;
        const T sx = static_cast<T>(std::max<std::int64_t>(w - 1, 0)) * T(0.5);
        const T sy = static_cast<T>(std::max<std::int64_t>(h - 1, 0)) * T(0.5);
        for (std::int64_t b = 0; b < n; ++b) {
          for (std::int64_t q = 0; q < pts; ++q) {
            const T* cq = cv.ptr() + (b * pts + q) * 2;
            const Tap<T> t = make_tap(cq[0], cq[1], h, w);
            const T w00 = (T(1) - t.wy) * (T(1) - t.wx), w01 = (T(1) - t.wy) * t.wx;
            const T w10 = t.wy * (T(1) - t.wx), w11 = t.wy * t.wx;
            const std::int64_t o00 = t.y0 * w + t.x0, o01 = t.y0 * w + t.x1;
            const std::int64_t o10 = t.y1 * w + t.x0, o11 = t.y1 * w + t.x1;
            T dpx = 0, dpy = 0;
            for (std::int64_t ch = 0; ch < c; ++ch) {
              const T go = g[(b * c + ch) * pts + q];
              const std::int64_t base = (b * c + ch) * h * w;
              if (gx) {
                gx[base + o00] += go * w00;
                gx[base + o01] += go * w01;
                gx[base + o10] += go * w10;
                gx[base + o11] += go * w11;
              }
              if (gc) {
                const T* plane = xv.ptr() + base;
                const T a = plane[o00], bb = plane[o01], cc = plane[o10], d = plane[o11];
                dpx += go * ((T(1) - t.wy) * (bb - a) + t.wy * (d - cc));
                dpy += go * ((T(1) - t.wx) * (cc - a) + t.wx * (d - bb));
              }
            }
            if (gc) {
              T* gq = gc + (b * pts + q) * 2;
              if (t.inside_x) gq[0] += dpx * sx;
              if (t.inside_y) gq[1] += dpy * sy;
            }
          }
        }
      });
}

template float unnormalize_coord(float, std::int64_t);
template double unnormalize_coord(double, std::int64_t);
template float normalize_coord(float, std::int64_t);
template double normalize_coord(double, std::int64_t);
template Var<float> bilinear_sample(Var<float>, Var<float>);
template Var<double> bilinear_sample(Var<double>, Var<double>);

}  // namespace ddt::nn
