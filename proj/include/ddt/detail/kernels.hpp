// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small inner-loop helpers shared by the CPU kernels.

#pragma once

#include <cstdint>
#include <vector>

namespace ddt::detail {

// Dot product with four partial sums; the summation order is fixed, so the
// result is deterministic for a given length.
template <typename T>
inline T dot(const T* a, const T* b, std::int64_t n) {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

template <typename T>
inline T sum(const T* a, std::int64_t n) {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i];
    s1 += a[i + 1];
    s2 += a[i + 2];
    s3 += a[i + 3];
  }
  for (; i < n; ++i) s0 += a[i];
  return (s0 + s1) + (s2 + s3);
}

// y += alpha * x
template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Visits every element of an N-d index space of extents `dims`, passing the
// linear output index and two strided offsets. Strides may be zero
// (broadcast) or permuted.
template <typename F>
void for_each_strided(const std::vector<std::int64_t>& dims, const std::vector<std::int64_t>& sa,
                      const std::vector<std::int64_t>& sb, F&& f) {
  const int r = static_cast<int>(dims.size());
  std::int64_t total = 1;
  for (auto d : dims) total *= d;
  if (total == 0) return;
  if (r == 0) {
    f(std::int64_t{0}, std::int64_t{0}, std::int64_t{0});
    return;
  }
  const std::int64_t inner = dims[r - 1];
  const std::int64_t ia = sa[r - 1];
  const std::int64_t ib = sb[r - 1];
  std::vector<std::int64_t> idx(r, 0);
  std::int64_t oa = 0, ob = 0;
  for (std::int64_t o = 0; o < total; o += inner) {
    for (std::int64_t j = 0; j < inner; ++j) f(o + j, oa + j * ia, ob + j * ib);
    for (int d = r - 2; d >= 0; --d) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < dims[d]) break;
      oa -= sa[d] * dims[d];
      ob -= sb[d] * dims[d];
      idx[d] = 0;
    }
  }
}

}  // namespace ddt::detail
