// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ddt/detail/kernels.hpp"
#include "ddt/flops.hpp"

namespace ddt::ops {
namespace {

struct BroadcastPlan {
  Shape out;
  std::vector<std::int64_t> sa;
  std::vector<std::int64_t> sb;
  bool same = false;
};

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  BroadcastPlan p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const auto mismatch = [&] {
    return std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                                 shape_str(b));
  };
  if (shape_numel(b) == 1) {
    p.out = a;
    p.sa = strides_of(a);
    p.sb.assign(a.size(), 0);
    return p;
  }
  if (shape_numel(a) == 1) {
    p.out = b;
    p.sa.assign(b.size(), 0);
    p.sb = strides_of(b);
    return p;
  }
  if (a.size() != b.size()) throw mismatch();
  const auto st_a = strides_of(a);
  const auto st_b = strides_of(b);
  p.out.resize(a.size());
  p.sa.resize(a.size());
  p.sb.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i] && a[i] != 1 && b[i] != 1) throw mismatch();
    p.out[i] = std::max(a[i], b[i]);
    p.sa[i] = (a[i] == 1 && p.out[i] != 1) ? 0 : st_a[i];
    p.sb[i] = (b[i] == 1 && p.out[i] != 1) ? 0 : st_b[i];
  }
  return p;
}

enum class BinaryKind { kAdd, kSub, kMul };

template <typename T>
Var<T> binary(Var<T> a, Var<T> b, BinaryKind kind, const char* name) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  BroadcastPlan plan = plan_broadcast(av.shape(), bv.shape(), name);
  Tensor<T> out(plan.out);
  const T* pa = av.ptr();
  const T* pb = bv.ptr();
  T* po = out.ptr();
  const auto apply = [kind](T x, T y) {
    switch (kind) {
      case BinaryKind::kAdd: return x + y;
      case BinaryKind::kSub: return x - y;
      default: return x * y;
    }
  };
  if (plan.same) {
    for (std::size_t i = 0; i < out.size(); ++i) po[i] = apply(pa[i], pb[i]);
  } else {
    detail::for_each_strided(plan.out, plan.sa, plan.sb,
                             [&](std::int64_t o, std::int64_t ia, std::int64_t ib) {
                               po[o] = apply(pa[ia], pb[ib]);
                             });
  }
  count_flops(out.size());

  const std::size_t ia_id = a.id(), ib_id = b.id();
  return a.tape().record(
      name, std::move(out), {a, b},
      [ia_id, ib_id, kind, plan](Tape<T>& tape, std::size_t self) {
        const Tensor<T>& g = tape.grad_of(self);
        const bool need_a = tape.requires_grad(ia_id);
        const bool need_b = tape.requires_grad(ib_id);
        const Tensor<T>& av = tape.value(ia_id);
        const Tensor<T>& bv = tape.value(ib_id);
        T* ga = need_a ? tape.grad_buffer(ia_id).ptr() : nullptr;
        T* gb = need_b ? tape.grad_buffer(ib_id).ptr() : nullptr;
        const T* pg = g.ptr();
        const T* pa = av.ptr();
        const T* pb = bv.ptr();
        const auto step = [&](std::int64_t o, std::int64_t ia, std::int64_t ib) {
          switch (kind) {
            case BinaryKind::kAdd:
              if (ga) ga[ia] += pg[o];
              if (gb) gb[ib] += pg[o];
              break;
            case BinaryKind::kSub:
              if (ga) ga[ia] += pg[o];
              if (gb) gb[ib] -= pg[o];
              break;
            case BinaryKind::kMul:
              if (ga) ga[ia] += pg[o] * pb[ib];
              if (gb) gb[ib] += pg[o] * pa[ia];
              break;
          }
        };
        if (plan.same) {
          for (std::int64_t i = 0; i < static_cast<std::int64_t>(g.size()); ++i) step(i, i, i);
        } else {
          detail::for_each_strided(plan.out, plan.sa, plan.sb, step);
        }
      });
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return binary(a, b, BinaryKind::kAdd, "add");
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return binary(a, b, BinaryKind::kSub, "sub");
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return binary(a, b, BinaryKind::kMul, "mul");
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  const Tensor<T>& av = a.value();
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  count_flops(out.size());
  const std::size_t ai = a.id();
  return a.tape().record("scale", std::move(out), {a}, [ai, factor](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& g = tape.grad_of(self);
    Tensor<T>& ga = tape.grad_buffer(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T value) {
  const Tensor<T>& av = a.value();
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + value;
  count_flops(out.size());
  const std::size_t ai = a.id();
  return a.tape().record("add_scalar", std::move(out), {a}, [ai](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& g = tape.grad_of(self);
    Tensor<T>& ga = tape.grad_buffer(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <typename T>
Var<T> tanh(Var<T> x) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  count_flops(out.size());
  const std::size_t xi = x.id();
  Var<T> y = x.tape().record("tanh", std::move(out), {x}, [xi](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& g = tape.grad_of(self);
    const Tensor<T>& yv = tape.value(self);
    Tensor<T>& gx = tape.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T(1) - yv[i] * yv[i]);
  });
  return y;
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-xv[i]));
  count_flops(out.size());
  const std::size_t xi = x.id();
  return x.tape().record("sigmoid", std::move(out), {x}, [xi](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& g = tape.grad_of(self);
    const Tensor<T>& yv = tape.value(self);
    Tensor<T>& gx = tape.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i] * (T(1) - yv[i]);
  });
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.rank() < 2 || bv.rank() < 2) {
    throw std::invalid_argument("matmul: operands must have rank >= 2, got " + shape_str(av.shape()) +
                                " and " + shape_str(bv.shape()));
  }
  const std::int64_t m = av.dim(-2), k = av.dim(-1), kb = bv.dim(-2), n = bv.dim(-1);
  if (k != kb) {
    throw std::invalid_argument("matmul: inner dimensions differ: " + shape_str(av.shape()) + " x " +
                                shape_str(bv.shape()));
  }
  Shape lead_a(av.shape().begin(), av.shape().end() - 2);
  Shape lead_b(bv.shape().begin(), bv.shape().end() - 2);
  Shape lead;
  std::int64_t stride_a = m * k, stride_b = k * n;
  if (lead_a == lead_b) {
    lead = lead_a;
  } else if (lead_b.empty()) {
    lead = lead_a;
    stride_b = 0;
  } else if (lead_a.empty()) {
    lead = lead_b;
    stride_a = 0;
  } else {
    throw std::invalid_argument("matmul: batch dimensions differ: " + shape_str(av.shape()) + " x " +
                                shape_str(bv.shape()));
  }
  const std::int64_t batch = shape_numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor<T> out(out_shape);
  for (std::int64_t bi = 0; bi < batch; ++bi) {
    const T* pa = av.ptr() + bi * stride_a;
    const T* pb = bv.ptr() + bi * stride_b;
    T* pc = out.ptr() + bi * m * n;
    for (std::int64_t i = 0; i < m; ++i) {
      for (std::int64_t p = 0; p < k; ++p) detail::axpy(pa[i * k + p], pb + p * n, pc + i * n, n);
    }
  }
  count_macs(static_cast<std::uint64_t>(batch * m * n * k));

  const std::size_t ai = a.id(), bi_id = b.id();
  return a.tape().record(
      "matmul", std::move(out), {a, b},
      [ai, bi_id, batch, m, n, k, stride_a, stride_b](Tape<T>& tape, std::size_t self) {
        const Tensor<T>& g = tape.grad_of(self);
        const Tensor<T>& av = tape.value(ai);
        const Tensor<T>& bv = tape.value(bi_id);
        T* ga = tape.requires_grad(ai) ? tape.grad_buffer(ai).ptr() : nullptr;
        T* gb = tape.requires_grad(bi_id) ? tape.grad_buffer(bi_id).ptr() : nullptr;
        for (std::int64_t b = 0; b < batch; ++b) {
          const T* pa = av.ptr() + b * stride_a;
          const T* pb = bv.ptr() + b * stride_b;
          const T* pg = g.ptr() + b * m * n;
          if (ga) {
            T* da = ga + b * stride_a;
            for (std::int64_t i = 0; i < m; ++i)
              for (std::int64_t p = 0; p < k; ++p) da[i * k + p] += detail::dot(pg + i * n, pb + p * n, n);
          }
          if (gb) {
            T* db = gb + b * stride_b;
            for (std::int64_t i = 0; i < m; ++i)
              for (std::int64_t p = 0; p < k; ++p) detail::axpy(pa[i * k + p], pg + i * n, db + p * n, n);
          }
        }
      });
}

template <typename T>
Var<T> softmax(Var<T> x, int axis) {
  const Tensor<T>& xv = x.value();
  const int ax = normalize_axis(axis, xv.rank());
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= xv.dim(i);
  for (int i = ax + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
  const std::int64_t len = xv.dim(ax);
  Tensor<T> out(xv.shape());
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const T* px = xv.ptr() + o * len * inner + in;
      T* py = out.ptr() + o * len * inner + in;
      T mx = px[0];
      for (std::int64_t j = 1; j < len; ++j) mx = std::max(mx, px[j * inner]);
      T total = 0;
      for (std::int64_t j = 0; j < len; ++j) {
        const T e = std::exp(px[j * inner] - mx);
        py[j * inner] = e;
        total += e;
      }
      const T inv = T(1) / total;
      for (std::int64_t j = 0; j < len; ++j) py[j * inner] *= inv;
    }
  }
  count_flops(4 * out.size());
  const std::size_t xi = x.id();
  return x.tape().record("softmax", std::move(out), {x},
                         [xi, outer, inner, len](Tape<T>& tape, std::size_t self) {
                           const Tensor<T>& g = tape.grad_of(self);
                           const Tensor<T>& y = tape.value(self);
                           Tensor<T>& gx = tape.grad_buffer(xi);
                           for (std::int64_t o = 0; o < outer; ++o) {
                             for (std::int64_t in = 0; in < inner; ++in) {
                               const std::int64_t base = o * len * inner + in;
                               T s = 0;
                               for (std::int64_t j = 0; j < len; ++j)
                                 s += g[base + j * inner] * y[base + j * inner];
                               for (std::int64_t j = 0; j < len; ++j) {
                                 const std::int64_t q = base + j * inner;
                                 gx[q] += y[q] * (g[q] - s);
                               }
                             }
                           }
                         });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value().reshape(std::move(shape));
  const std::size_t xi = x.id();
  return x.tape().record("reshape", std::move(out), {x}, [xi](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& g = tape.grad_of(self);
    Tensor<T>& gx = tape.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <typename T>
Tensor<T> permute_tensor(const Tensor<T>& x, const std::vector<int>& axes) {
  const int r = x.rank();
  if (static_cast<int>(axes.size()) != r) {
    throw std::invalid_argument("permute: " + std::to_string(axes.size()) + " axes for tensor of shape " +
                                shape_str(x.shape()));
  }
  std::vector<bool> seen(r, false);
  Shape out_shape(r);
  const auto in_strides = strides_of(x.shape());
  std::vector<std::int64_t> src_strides(r);
  for (int i = 0; i < r; ++i) {
    const int a = normalize_axis(axes[i], r);
    if (seen[a]) throw std::invalid_argument("permute: repeated axis " + std::to_string(a));
    seen[a] = true;
    out_shape[i] = x.dim(a);
    src_strides[i] = in_strides[a];
  }
  Tensor<T> out(out_shape);
  const T* px = x.ptr();
  T* po = out.ptr();
  detail::for_each_strided(out_shape, src_strides, src_strides,
                           [&](std::int64_t o, std::int64_t s, std::int64_t) { po[o] = px[s]; });
  return out;
}

template <typename T>
Var<T> permute(Var<T> x, const std::vector<int>& axes) {
  Tensor<T> out = permute_tensor(x.value(), axes);
  std::vector<int> inverse(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i)
    inverse[normalize_axis(axes[i], static_cast<int>(axes.size()))] = static_cast<int>(i);
  const std::size_t xi = x.id();
  return x.tape().record("permute", std::move(out), {x}, [xi, inverse](Tape<T>& tape, std::size_t self) {
    Tensor<T> back = permute_tensor(tape.grad_of(self), inverse);
    Tensor<T>& gx = tape.grad_buffer(xi);
    for (std::size_t i = 0; i < back.size(); ++i) gx[i] += back[i];
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& first = xs[0].shape();
  const int ax = normalize_axis(axis, static_cast<int>(first.size()));
  Shape out_shape = first;
  out_shape[ax] = 0;
  std::vector<std::int64_t> lens;
  for (const auto& v : xs) {
    const Shape& s = v.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (static_cast<int>(i) == ax) || s[i] == first[i];
    if (!ok) {
      throw std::invalid_argument("concat: shape " + shape_str(s) + " incompatible with " +
                                  shape_str(first) + " along axis " + std::to_string(ax));
    }
    lens.push_back(s[ax]);
    out_shape[ax] += s[ax];
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= first[i];
  for (std::size_t i = ax + 1; i < first.size(); ++i) inner *= first[i];
  Tensor<T> out(out_shape);
  const std::int64_t total = out_shape[ax];
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Tensor<T>& v = xs[k].value();
    const std::int64_t block = lens[k] * inner;
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(v.ptr() + o * block, block, out.ptr() + (o * total + offset) * inner);
    offset += lens[k];
  }
  std::vector<std::size_t> ids;
  for (const auto& v : xs) ids.push_back(v.id());
  return xs[0].tape().record(
      "concat", std::move(out), xs, [ids, lens, outer, inner, total](Tape<T>& tape, std::size_t self) {
        const Tensor<T>& g = tape.grad_of(self);
        std::int64_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (tape.requires_grad(ids[k])) {
            Tensor<T>& gx = tape.grad_buffer(ids[k]);
            const std::int64_t block = lens[k] * inner;
            for (std::int64_t o = 0; o < outer; ++o) {
              const T* src = g.ptr() + (o * total + offset) * inner;
              T* dst = gx.ptr() + o * block;
              for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
            }
          }
          offset += lens[k];
        }
      });
}

template <typename T>
std::vector<Var<T>> split(Var<T> x, const std::vector<std::int64_t>& sizes, int axis) {
  const Tensor<T>& xv = x.value();
  const int ax = normalize_axis(axis, xv.rank());
  const std::int64_t total = xv.dim(ax);
  if (std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0}) != total) {
    throw std::invalid_argument("split: piece sizes do not sum to extent " + std::to_string(total) +
                                " of axis " + std::to_string(ax) + " in " + shape_str(xv.shape()));
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= xv.dim(i);
  for (int i = ax + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
  std::vector<Var<T>> pieces;
  std::int64_t offset = 0;
  const std::size_t xi = x.id();
  for (auto len : sizes) {
    Shape s = xv.shape();
    s[ax] = len;
    Tensor<T> out(s);
    const std::int64_t block = len * inner;
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(xv.ptr() + (o * total + offset) * inner, block, out.ptr() + o * block);
    pieces.push_back(x.tape().record(
        "split", std::move(out), {x}, [xi, outer, inner, total, offset, len](Tape<T>& tape, std::size_t self) {
          const Tensor<T>& g = tape.grad_of(self);
          Tensor<T>& gx = tape.grad_buffer(xi);
          const std::int64_t block = len * inner;
          for (std::int64_t o = 0; o < outer; ++o) {
            T* dst = gx.ptr() + (o * total + offset) * inner;
            const T* src = g.ptr() + o * block;
            for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
          }
        }));
    offset += len;
  }
  return pieces;
}

template <typename T>
std::vector<Var<T>> chunk(Var<T> x, int parts, int axis) {
  const std::int64_t extent = x.dim(axis);
  if (parts <= 0 || extent % parts != 0) {
    throw std::invalid_argument("chunk: extent " + std::to_string(extent) + " not divisible into " +
                                std::to_string(parts) + " parts");
  }
  return split(x, std::vector<std::int64_t>(parts, extent / parts), axis);
}

template <typename T>
Var<T> sum(Var<T> x) {
  const Tensor<T>& xv = x.value();
  T s = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
  count_flops(xv.size());
  const std::size_t xi = x.id();
  return x.tape().record("sum", Tensor<T>::scalar(s), {x}, [xi](Tape<T>& tape, std::size_t self) {
    const T g = tape.grad_of(self)[0];
    Tensor<T>& gx = tape.grad_buffer(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw std::invalid_argument("mean of an empty tensor");
  return scale(sum(x), T(1) / static_cast<T>(n));
}

#define DDT_INSTANTIATE_OPS(T)                                                              \
  template Var<T> add(Var<T>, Var<T>);                                                      \
  template Var<T> sub(Var<T>, Var<T>);                                                      \
  template Var<T> mul(Var<T>, Var<T>);                                                      \
  template Var<T> scale(Var<T>, T);                                                         \
  template Var<T> add_scalar(Var<T>, T);                                                    \
  template Var<T> tanh(Var<T>);                                                             \
  template Var<T> sigmoid(Var<T>);                                                          \
  template Var<T> matmul(Var<T>, Var<T>);                                                   \
  template Var<T> softmax(Var<T>, int);                                                     \
  template Var<T> reshape(Var<T>, Shape);                                                   \
  template Var<T> permute(Var<T>, const std::vector<int>&);                                 \
  template Var<T> concat(const std::vector<Var<T>>&, int);                                  \
  template std::vector<Var<T>> split(Var<T>, const std::vector<std::int64_t>&, int);        \
  template std::vector<Var<T>> chunk(Var<T>, int, int);                                     \
  template Var<T> sum(Var<T>);                                                              \
  template Var<T> mean(Var<T>);                                                             \
  template Tensor<T> permute_tensor(const Tensor<T>&, const std::vector<int>&);

DDT_INSTANTIATE_OPS(float)
DDT_INSTANTIATE_OPS(double)

}  // namespace ddt::ops
