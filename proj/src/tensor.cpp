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

#include "cosg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

#include "cosg/errors.hpp"

namespace cosg {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : Tensor(Shape{rows, cols}, fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
  if (shape_size(shape_) != values_.size()) {
    throw DimensionError("tensor shape " + shape_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(v));
}

std::size_t Tensor::rows() const noexcept {
  if (shape_.size() < 2) return 1;
  return shape_[0];
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 1;
  return shape_.back();
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::reshape(Shape shape) {
  if (shape_size(shape) != values_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

bool Tensor::all_finite() const noexcept {
  return Eigen::Map<const Eigen::ArrayXd>(values_.data(), static_cast<Eigen::Index>(values_.size())).isFinite().all();
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t count) const {
  if (rank() != 2 || begin + count > rows()) {
    throw DimensionError("row slice [" + std::to_string(begin) + ", +" + std::to_string(count) +
                         ") out of range for " + shape_string(shape_));
  }
  const std::size_t c = cols();
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                        values_.begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
  return Tensor(Shape{count, c}, std::move(v));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) return Tensor(Shape{0, 0});
  const std::size_t c = parts.front().cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) {
      throw DimensionError("concat_rows: " + shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    r += p.rows();
  }
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& p : parts) v.insert(v.end(), p.storage().begin(), p.storage().end());
  return Tensor(Shape{r, c}, std::move(v));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) return Tensor(Shape{0, 0});
  const std::size_t r = parts.front().rows();
  std::size_t c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) {
      throw DimensionError("concat_cols: " + shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    c += p.cols();
  }
  Tensor out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double* dst = out.data() + i * c;
    for (const auto& p : parts) {
      const auto row = p.row(i);
      dst = std::copy(row.begin(), row.end(), dst);
    }
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw DimensionError("max_abs_diff: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace cosg
