// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "ddt/blocks.hpp"
#include "ddt/ops.hpp"

namespace ddt::blocks {
namespace {

void require(std::int64_t h, std::int64_t w, int p, const char* what) {
  if (p < 1 || h % p != 0 || w % p != 0) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(h) + "x" + std::to_string(w) +
                                " is not divisible by " + std::to_string(p));
  }
}

template <typename T>
void require_nchw(Var<T> x, const char* what) {
  if (x.rank() != 4) throw std::invalid_argument(std::string(what) + ": expected NCHW, got " + shape_str(x.shape()));
}

}  // namespace

template <typename T>
Var<T> partition_local(Var<T> x, int p) {
  require_nchw(x, "partition_local");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  require(h, w, p, "partition_local");
  const Var<T> t = ops::permute(ops::reshape(x, {n, c, h / p, p, w / p, p}), {0, 2, 4, 1, 3, 5});
  return ops::reshape(t, {n * (h / p) * (w / p), c, p, p});
}

template <typename T>
Var<T> unpartition_local(Var<T> patches, int p, std::int64_t h, std::int64_t w) {
  require_nchw(patches, "unpartition_local");
  require(h, w, p, "unpartition_local");
  const std::int64_t per_image = (h / p) * (w / p), c = patches.dim(1);
  if (patches.dim(0) % per_image != 0 || patches.dim(2) != p || patches.dim(3) != p) {
    throw std::invalid_argument("unpartition_local: " + shape_str(patches.shape()) + " does not tile " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  const std::int64_t n = patches.dim(0) / per_image;
  const Var<T> t = ops::permute(ops::reshape(patches, {n, h / p, w / p, c, p, p}), {0, 3, 1, 4, 2, 5});
  return ops::reshape(t, {n, c, h, w});
}

template <typename T>
Var<T> partition_global(Var<T> x, int g) {
  require_nchw(x, "partition_global");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  require(h, w, g, "partition_global");
  const Var<T> t = ops::permute(ops::reshape(x, {n, c, g, h / g, g, w / g}), {0, 3, 5, 1, 2, 4});
  return ops::reshape(t, {n * (h / g) * (w / g), c, g, g});
}

template <typename T>
Var<T> unpartition_global(Var<T> groups, int g, std::int64_t h, std::int64_t w) {
  require_nchw(groups, "unpartition_global");
  require(h, w, g, "unpartition_global");
  const std::int64_t per_image = (h / g) * (w / g), c = groups.dim(1);
  if (groups.dim(0) % per_image != 0 || groups.dim(2) != g || groups.dim(3) != g) {
    throw std::invalid_argument("unpartition_global: " + shape_str(groups.shape()) + " does not tile " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  const std::int64_t n = groups.dim(0) / per_image;
  const Var<T> t = ops::permute(ops::reshape(groups, {n, h / g, w / g, c, g, g}), {0, 3, 4, 1, 5, 2});
  return ops::reshape(t, {n, c, h, w});
}

#define DDT_INSTANTIATE_PARTITION(T)                                            \
  template Var<T> partition_local<T>(Var<T>, int);                              \
  template Var<T> unpartition_local<T>(Var<T>, int, std::int64_t, std::int64_t); \
  template Var<T> partition_global<T>(Var<T>, int);                             \
  template Var<T> unpartition_global<T>(Var<T>, int, std::int64_t, std::int64_t);

DDT_INSTANTIATE_PARTITION(float)
DDT_INSTANTIATE_PARTITION(double)

}  // namespace ddt::blocks
