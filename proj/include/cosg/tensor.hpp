// Copyright (c) 2026 The cosg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace cosg {

using Shape = std::vector<std::size_t>;

/// Allocator returning 64-byte aligned blocks. Vectorised reductions peel
/// scalar iterations until the first aligned address, so a fixed alignment
/// keeps summation order, and therefore results, independent of the heap.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major block of doubles. Rank 1 and rank 2 are the only ranks
/// the graph operations use; the checkpoint container accepts any rank.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  /// Leading dimension for rank 2, 1 for rank 1.
  std::size_t rows() const noexcept;
  /// Trailing dimension.
  std::size_t cols() const noexcept;

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const Storage& storage() const noexcept { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols(), cols()};
  }

  void fill(double v);
  void reshape(Shape shape);
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

  /// Rows [begin, begin + count) of a rank-2 tensor.
  Tensor slice_rows(std::size_t begin, std::size_t count) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  Storage values_;
};

/// Row-wise concatenation of rank-2 tensors that share a column count.
Tensor concat_rows(std::span<const Tensor> parts);
/// Column-wise concatenation of rank-2 tensors that share a row count.
Tensor concat_cols(std::span<const Tensor> parts);

double max_abs_diff(const Tensor& a, const Tensor& b);

/// A trainable tensor with a persistent gradient buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(0.0); }
};

}  // namespace cosg
