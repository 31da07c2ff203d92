// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Test oracles written independently of the library kernels: central finite
// differences and brute-force reference implementations on plain loops.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ddt/autodiff.hpp"
#include "ddt/ops.hpp"

namespace oracle {

using ddt::Parameter;
using ddt::Shape;
using ddt::Tape;
using Tensor = ddt::Tensor<double>;
using Var = ddt::Var<double>;

inline Tensor random(const Shape& s, std::uint64_t seed, double lo = -1, double hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(s);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Scalarizes an output with fixed random weights so every element matters.
inline Var weigh(Var y, std::uint64_t seed = 99) {
  return ddt::ops::sum(ddt::ops::mul(y, y.tape().constant(random(y.shape(), seed))));
}

inline double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4});
}

using Fn = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

struct FdResult {
  double max_err = 0;
  std::size_t count = 0;
};

// Every entry (or a seeded sample of `limit` entries) of every input and
// parameter, perturbed by +-eps.
inline FdResult finite_difference(const Fn& f, std::vector<Tensor> inputs, const std::vector<Parameter<double>*>& params,
                                  std::size_t limit = 40, double eps = 1e-5) {
  std::vector<Tensor> gin;
  {
    Tape<double> tape;
    std::vector<Var> vs;
    for (auto& t : inputs) vs.push_back(tape.leaf(t));
    tape.backward(f(tape, vs));
    for (auto& v : vs) gin.push_back(tape.grad(v));
  }
  std::vector<Tensor> gp;
  for (auto* p : params) gp.push_back(p->grad);

  const auto eval = [&] {
    Tape<double> tape;
    std::vector<Var> vs;
    for (auto& t : inputs) vs.push_back(tape.constant(t));
    return f(tape, vs).value()[0];
  };
  FdResult r;
  std::mt19937_64 rng(1234);
  const auto probe = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + eps;
    const double up = eval();
    slot = keep - eps;
    const double dn = eval();
    slot = keep;
    r.max_err = std::max(r.max_err, rel_err(analytic, (up - dn) / (2 * eps)));
    ++r.count;
  };
  const auto indices = [&](std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (n > k) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(k);
    }
    return idx;
  };
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (auto i : indices(inputs[t].size(), limit)) probe(inputs[t][i], gin[t][i]);
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (auto i : indices(params[p]->value.size(), std::max<std::size_t>(3, limit / 8))) probe(params[p]->value[i], gp[p][i]);
  }
  return r;
}

// Direct 7-loop convolution.
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad, int groups,
                     bool reflect = false) {
  const auto n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const auto co = w.dim(0), kh = w.dim(2), kw = w.dim(3), cig = ci / groups, cog = co / groups;
  const auto ho = (h + 2 * pad - kh) / stride + 1, wo = (wd + 2 * pad - kw) / stride + 1;
  const auto mirror = [](std::int64_t i, std::int64_t len) { return i < 0 ? -i : (i >= len ? 2 * (len - 1) - i : i); };
  Tensor out(Shape{n, co, ho, wo});
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t o = 0; o < co; ++o)
      for (std::int64_t y = 0; y < ho; ++y)
        for (std::int64_t xx = 0; xx < wo; ++xx) {
          double s = b ? (*b)[o] : 0.0;
          const auto g = o / cog;
          for (std::int64_t c = 0; c < cig; ++c)
            for (std::int64_t ky = 0; ky < kh; ++ky)
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                std::int64_t sy = y * stride + ky - pad, sx = xx * stride + kx - pad;
                if (reflect) {
                  sy = mirror(sy, h);
                  sx = mirror(sx, wd);
                } else if (sy < 0 || sy >= h || sx < 0 || sx >= wd) {
                  continue;
                }
                s += x[((in * ci + g * cig + c) * h + sy) * wd + sx] * w[((o * cig + c) * kh + ky) * kw + kx];
              }
          out[((in * co + o) * ho + y) * wo + xx] = s;
        }
  return out;
}

// Plain multi-head self-attention over all pixels of x [N, C, H, W] using
// 1x1 projection weights wq, wk, wv, wo ([C, C]) and biases ([C]).
inline Tensor dense_mhsa(const Tensor& x, const Tensor* w[4], const Tensor* b[4], int heads) {
  const auto n = x.dim(0), c = x.dim(1), t = x.dim(2) * x.dim(3), d = c / heads;
  const auto proj = [&](const Tensor& in, int which) {
    Tensor out(Shape{n, c, t});
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t o = 0; o < c; ++o)
        for (std::int64_t p = 0; p < t; ++p) {
          double s = (*b[which])[o];
          for (std::int64_t k = 0; k < c; ++k) s += (*w[which])[o * c + k] * in[(i * c + k) * t + p];
          out[(i * c + o) * t + p] = s;
        }
    return out;
  };
  const Tensor q = proj(x, 0), k = proj(x, 1), v = proj(x, 2);
  Tensor z(Shape{n, c, t});
  for (std::int64_t i = 0; i < n; ++i)
    for (int m = 0; m < heads; ++m)
      for (std::int64_t a = 0; a < t; ++a) {
        std::vector<double> s(t);
        double mx = -1e300;
        for (std::int64_t bb = 0; bb < t; ++bb) {
          double acc = 0;
          for (std::int64_t e = 0; e < d; ++e) acc += q[(i * c + m * d + e) * t + a] * k[(i * c + m * d + e) * t + bb];
          s[bb] = acc / std::sqrt(static_cast<double>(d));
          mx = std::max(mx, s[bb]);
        }
        double den = 0;
        for (auto& vv : s) den += (vv = std::exp(vv - mx));
        for (std::int64_t e = 0; e < d; ++e) {
          double acc = 0;
          for (std::int64_t bb = 0; bb < t; ++bb) acc += s[bb] / den * v[(i * c + m * d + e) * t + bb];
          z[(i * c + m * d + e) * t + a] = acc;
        }
      }
  Tensor out = proj(z, 3);
  return out.reshape(x.shape());
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
