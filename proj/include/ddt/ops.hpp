// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable tensor operations recorded on a Tape.

#pragma once

#include <vector>

#include "ddt/autodiff.hpp"

namespace ddt::ops {

// Elementwise binary ops. `b` must have the same rank as `a` with every extent
// equal or 1 (broadcast), or hold a single element.
template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> a, T factor);
template <typename T>
Var<T> add_scalar(Var<T> a, T value);

template <typename T>
Var<T> tanh(Var<T> x);
template <typename T>
Var<T> sigmoid(Var<T> x);

// [..., m, k] x [..., k, n] -> [..., m, n]. Leading dims must match, or one
// operand is a plain matrix broadcast over the other's batch.
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

// Max-subtracted softmax along `axis`.
template <typename T>
Var<T> softmax(Var<T> x, int axis);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);
template <typename T>
Var<T> permute(Var<T> x, const std::vector<int>& axes);
template <typename T>
Var<T> concat(const std::vector<Var<T>>& xs, int axis);
// Splits `axis` into pieces of the given sizes (which must sum to the extent).
template <typename T>
std::vector<Var<T>> split(Var<T> x, const std::vector<std::int64_t>& sizes, int axis);
// Splits `axis` into `parts` equal pieces.
template <typename T>
std::vector<Var<T>> chunk(Var<T> x, int parts, int axis);

template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);

// Raw kernels shared with non-taped callers.
template <typename T>
Tensor<T> permute_tensor(const Tensor<T>& x, const std::vector<int>& axes);

}  // namespace ddt::ops
