// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major N-dimensional array.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace ddt {

using Shape = std::vector<std::int64_t>;

enum class DType { kF32, kF64 };

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "tensors hold float or double");
  return std::is_same_v<T, float> ? DType::kF32 : DType::kF64;
}

std::string to_string(DType dtype);
DType dtype_from_string(const std::string& name);
std::size_t dtype_size(DType dtype);

std::string shape_str(const Shape& shape);
std::int64_t shape_numel(const Shape& shape);

// Resolves a possibly negative axis against `rank`; throws std::out_of_range.
int normalize_axis(int axis, int rank);

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> data);

  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  static constexpr DType dtype() { return dtype_of<T>(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }
  std::vector<T>& storage() noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // Bounds-checked multi-index access.
  T& at(std::initializer_list<std::int64_t> index);
  const T& at(std::initializer_list<std::int64_t> index) const;

  // Copy with a new shape of equal element count; one extent may be -1.
  Tensor reshape(Shape shape) const;

  void fill(T value);
  bool all_finite() const;
  T item() const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t flat_index(std::initializer_list<std::int64_t> index) const;

  Shape shape_;
  std::vector<T> data_;
};

// Row-major strides of `shape`.
std::vector<std::int64_t> strides_of(const Shape& shape);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace ddt
