// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "ddt/detail/kernels.hpp"
#include "ddt/flops.hpp"
#include "ddt/nn.hpp"

namespace ddt::nn {
namespace {

struct ConvGeometry {
  std::int64_t n, c_in, h, w;
  std::int64_t c_out, kh, kw;
  std::int64_t hp, wp;  // padded input extents
  std::int64_t ho, wo;
  int stride, pad, groups;
  PadMode mode;
};

std::string describe(const Shape& x, const Shape& w, const Conv2dOptions& o) {
  std::ostringstream os;
  os << "input " << shape_str(x) << ", weight " << shape_str(w) << ", stride " << o.stride
     << ", padding " << o.padding << (o.pad_mode == PadMode::kReflect ? " (reflect)" : " (zero)")
     << ", groups " << o.groups;
  return os.str();
}

ConvGeometry plan(const Shape& xs, const Shape& ws, const Conv2dOptions& o) {
  const auto fail = [&](const std::string& why) {
    return std::invalid_argument("conv2d: " + why + " [" + describe(xs, ws, o) + "]");
  };
  if (xs.size() != 4 || ws.size() != 4) throw fail("expected 4-d input and weight");
  if (o.stride < 1 || o.groups < 1 || o.padding < 0) throw fail("invalid stride/groups/padding");
  ConvGeometry g{};
  g.n = xs[0];
  g.c_in = xs[1];
  g.h = xs[2];
  g.w = xs[3];
  g.c_out = ws[0];
  g.kh = ws[2];
  g.kw = ws[3];
  g.stride = o.stride;
  g.pad = o.padding;
  g.groups = o.groups;
  g.mode = o.pad_mode;
  if (g.c_in % g.groups != 0 || g.c_out % g.groups != 0) throw fail("channels not divisible by groups");
  if (ws[1] != g.c_in / g.groups) throw fail("weight input-channel extent does not match C_in/groups");
  if (g.mode == PadMode::kReflect && (g.pad >= g.h || g.pad >= g.w)) {
    throw fail("reflect padding must be smaller than the spatial extents");
  }
  g.hp = g.h + 2 * g.pad;
  g.wp = g.w + 2 * g.pad;
  if (g.hp < g.kh || g.wp < g.kw) throw fail("kernel larger than padded input");
  g.ho = (g.hp - g.kh) / g.stride + 1;
  g.wo = (g.wp - g.kw) / g.stride + 1;
  return g;
}

inline std::int64_t reflect(std::int64_t i, std::int64_t n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

template <typename T>
Tensor<T> pad_input(const Tensor<T>& x, const ConvGeometry& g) {
  if (g.pad == 0) return x;
  Tensor<T> out(Shape{g.n, g.c_in, g.hp, g.wp});
  for (std::int64_t p = 0; p < g.n * g.c_in; ++p) {
    const T* src = x.ptr() + p * g.h * g.w;
    T* dst = out.ptr() + p * g.hp * g.wp;
    for (std::int64_t y = 0; y < g.hp; ++y) {
      const std::int64_t sy = y - g.pad;
      if (g.mode == PadMode::kZero) {
        if (sy < 0 || sy >= g.h) continue;
        std::copy_n(src + sy * g.w, g.w, dst + y * g.wp + g.pad);
      } else {
        const std::int64_t ry = reflect(sy, g.h);
        for (std::int64_t xx = 0; xx < g.wp; ++xx) dst[y * g.wp + xx] = src[ry * g.w + reflect(xx - g.pad, g.w)];
      }
    }
  }
  return out;
}

// Adds the padded-input gradient back onto the unpadded input gradient.
template <typename T>
void fold_padding(const Tensor<T>& gp, Tensor<T>& gx, const ConvGeometry& g) {
  for (std::int64_t p = 0; p < g.n * g.c_in; ++p) {
    const T* src = gp.ptr() + p * g.hp * g.wp;
    T* dst = gx.ptr() + p * g.h * g.w;
    for (std::int64_t y = 0; y < g.hp; ++y) {
      const std::int64_t sy = y - g.pad;
      if (g.mode == PadMode::kZero) {
        if (sy < 0 || sy >= g.h) continue;
        for (std::int64_t xx = 0; xx < g.w; ++xx) dst[sy * g.w + xx] += src[y * g.wp + g.pad + xx];
      } else {
        const std::int64_t ry = reflect(sy, g.h);
        for (std::int64_t xx = 0; xx < g.wp; ++xx) dst[ry * g.w + reflect(xx - g.pad, g.w)] += src[y * g.wp + xx];
      }
    }
  }
}

template <typename T>
void conv_forward(const Tensor<T>& xp, const Tensor<T>& w, const Tensor<T>* b, Tensor<T>& out,
                  const ConvGeometry& g) {
  const std::int64_t cin_g = g.c_in / g.groups, cout_g = g.c_out / g.groups;
  const std::int64_t in_plane = g.hp * g.wp, out_plane = g.ho * g.wo;
  const bool pointwise = g.kh == 1 && g.kw == 1 && g.stride == 1;
  for (std::int64_t n = 0; n < g.n; ++n) {
    for (std::int64_t co = 0; co < g.c_out; ++co) {
      T* po = out.ptr() + (n * g.c_out + co) * out_plane;
      if (b) std::fill_n(po, out_plane, (*b)[co]);
      const std::int64_t grp = co / cout_g;
      for (std::int64_t cl = 0; cl < cin_g; ++cl) {
        const std::int64_t ci = grp * cin_g + cl;
        const T* px = xp.ptr() + (n * g.c_in + ci) * in_plane;
        const T* pw = w.ptr() + ((co * cin_g + cl) * g.kh) * g.kw;
        if (pointwise) {
          detail::axpy(pw[0], px, po, out_plane);
          continue;
        }
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const T wv = pw[ky * g.kw + kx];
            for (std::int64_t oy = 0; oy < g.ho; ++oy) {
              const T* row = px + (oy * g.stride + ky) * g.wp + kx;
              T* orow = po + oy * g.wo;
              if (g.stride == 1) {
                detail::axpy(wv, row, orow, g.wo);
              } else {
                for (std::int64_t ox = 0; ox < g.wo; ++ox) orow[ox] += wv * row[ox * g.stride];
              }
            }
          }
        }
      }
    }
  }
  count_macs(static_cast<std::uint64_t>(g.n * g.c_out * out_plane * cin_g * g.kh * g.kw));
  if (b) count_flops(static_cast<std::uint64_t>(g.n * g.c_out * out_plane));
}

template <typename T>
void conv_backward(const Tensor<T>& xp, const Tensor<T>& w, const Tensor<T>& gout, Tensor<T>* gxp,
                   Tensor<T>* gw, Tensor<T>* gb, const ConvGeometry& g) {
  const std::int64_t cin_g = g.c_in / g.groups, cout_g = g.c_out / g.groups;
  const std::int64_t in_plane = g.hp * g.wp, out_plane = g.ho * g.wo;
  const bool pointwise = g.kh == 1 && g.kw == 1 && g.stride == 1;
  for (std::int64_t n = 0; n < g.n; ++n) {
    for (std::int64_t co = 0; co < g.c_out; ++co) {
      const T* pg = gout.ptr() + (n * g.c_out + co) * out_plane;
      if (gb) (*gb)[co] += detail::sum(pg, out_plane);
      const std::int64_t grp = co / cout_g;
      for (std::int64_t cl = 0; cl < cin_g; ++cl) {
        const std::int64_t ci = grp * cin_g + cl;
        const T* px = xp.ptr() + (n * g.c_in + ci) * in_plane;
        T* pgx = gxp ? gxp->ptr() + (n * g.c_in + ci) * in_plane : nullptr;
        const std::int64_t woff = ((co * cin_g + cl) * g.kh) * g.kw;
        const T* pw = w.ptr() + woff;
        T* pgw = gw ? gw->ptr() + woff : nullptr;
        if (pointwise) {
          if (pgw) pgw[0] += detail::dot(pg, px, out_plane);
          if (pgx) detail::axpy(pw[0], pg, pgx, out_plane);
          continue;
        }
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const T wv = pw[ky * g.kw + kx];
            T acc = 0;
            for (std::int64_t oy = 0; oy < g.ho; ++oy) {
              const std::int64_t in_off = (oy * g.stride + ky) * g.wp + kx;
              const T* grow = pg + oy * g.wo;
              if (g.stride == 1) {
                if (pgw) acc += detail::dot(grow, px + in_off, g.wo);
                if (pgx) detail::axpy(wv, grow, pgx + in_off, g.wo);
              } else {
                for (std::int64_t ox = 0; ox < g.wo; ++ox) {
                  if (pgw) acc += grow[ox] * px[in_off + ox * g.stride];
                  if (pgx) pgx[in_off + ox * g.stride] += wv * grow[ox];
                }
              }
            }
            if (pgw) pgw[ky * g.kw + kx] += acc;
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, std::optional<Var<T>> bias, const Conv2dOptions& opts) {
  const ConvGeometry g = plan(x.shape(), weight.shape(), opts);
  if (bias && (bias->rank() != 1 || bias->dim(0) != g.c_out)) {
    throw std::invalid_argument("conv2d: bias shape " + shape_str(bias->shape()) + " does not match " +
                                std::to_string(g.c_out) + " output channels");
  }
  Tensor<T> xp = pad_input(x.value(), g);
  Tensor<T> out(Shape{g.n, g.c_out, g.ho, g.wo});
  conv_forward(xp, weight.value(), bias ? &bias->value() : nullptr, out, g);

  const std::size_t xi = x.id(), wi = weight.id();
  const std::optional<std::size_t> bi = bias ? std::optional<std::size_t>(bias->id()) : std::nullopt;
  std::vector<Var<T>> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  // The padded copy is only kept when padding is in use; otherwise the input value is read back.
  auto saved = std::make_shared<Tensor<T>>(g.pad > 0 ? std::move(xp) : Tensor<T>());
  return x.tape().record("conv2d", std::move(out), inputs, [xi, wi, bi, g, saved](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& xpad = g.pad > 0 ? *saved : tape.value(xi);
    const bool need_x = tape.requires_grad(xi);
    Tensor<T> gxp;
    Tensor<T>* gxp_ptr = nullptr;
    if (need_x) {
      if (g.pad > 0) {
        gxp = Tensor<T>(xpad.shape());
        gxp_ptr = &gxp;
      } else {
        gxp_ptr = &tape.grad_buffer(xi);
      }
    }
    Tensor<T>* gw = tape.requires_grad(wi) ? &tape.grad_buffer(wi) : nullptr;
    Tensor<T>* gb = (bi && tape.requires_grad(*bi)) ? &tape.grad_buffer(*bi) : nullptr;
    conv_backward(xpad, tape.value(wi), tape.grad_of(self), gxp_ptr, gw, gb, g);
    if (need_x && g.pad > 0) fold_padding(gxp, tape.grad_buffer(xi), g);
  });
}

template Var<float> conv2d(Var<float>, Var<float>, std::optional<Var<float>>, const Conv2dOptions&);
template Var<double> conv2d(Var<double>, Var<double>, std::optional<Var<double>>, const Conv2dOptions&);

}  // namespace ddt::nn
