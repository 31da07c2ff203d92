// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ddt {

std::string to_string(DType dtype) { return dtype == DType::kF32 ? "f32" : "f64"; }

DType dtype_from_string(const std::string& name) {
  if (name == "f32" || name == "float32") return DType::kF32;
  if (name == "f64" || name == "float64") return DType::kF64;
  throw std::invalid_argument("unknown dtype '" + name + "' (expected f32 or f64)");
}

std::size_t dtype_size(DType dtype) { return dtype == DType::kF32 ? 4 : 8; }

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw std::invalid_argument("negative extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

int normalize_axis(int axis, int rank) {
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for rank " +
                            std::to_string(rank));
  }
  return a;
}

std::vector<std::int64_t> strides_of(const Shape& shape) {
  std::vector<std::int64_t> s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * shape[i + 1];
  return s;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
  }
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
  return shape_[normalize_axis(axis, rank())];
}

template <typename T>
std::size_t Tensor<T>::flat_index(std::initializer_list<std::int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw std::out_of_range("index rank " + std::to_string(index.size()) + " != tensor rank " +
                            std::to_string(rank()));
  }
  std::size_t flat = 0;
  int axis = 0;
  for (auto i : index) {
    if (i < 0 || i >= shape_[axis]) {
      throw std::out_of_range("index " + std::to_string(i) + " out of range on axis " +
                              std::to_string(axis) + " of " + shape_str(shape_));
    }
    flat = flat * static_cast<std::size_t>(shape_[axis]) + static_cast<std::size_t>(i);
    ++axis;
  }
  return flat;
}

template <typename T>
T& Tensor<T>::at(std::initializer_list<std::int64_t> index) {
  return data_[flat_index(index)];
}

template <typename T>
const T& Tensor<T>::at(std::initializer_list<std::int64_t> index) const {
  return data_[flat_index(index)];
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape shape) const {
  int inferred = -1;
  std::int64_t known = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (inferred >= 0) throw std::invalid_argument("reshape: more than one -1 extent");
      inferred = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (inferred >= 0 && known > 0) shape[inferred] = static_cast<std::int64_t>(size()) / known;
  if (shape_numel(shape) != static_cast<std::int64_t>(size())) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(shape_) + " as " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
T Tensor<T>::item() const {
  if (data_.size() != 1) {
    throw std::logic_error("item() on tensor of shape " + shape_str(shape_));
  }
  return data_[0];
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace ddt
