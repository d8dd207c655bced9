/* Copyright 2026 The atraj Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATRAJ_TENSOR_HPP_
#define ATRAJ_TENSOR_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "atraj/errors.hpp"

namespace atraj {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? ", " : "") << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major n-dimensional array with an optional gradient
/// accumulator of identical shape.
template <typename Scalar>
class Tensor {
 public:
  using scalar_type = Scalar;

  Tensor() : shape_{}, values_(Vector<Scalar>::Zero(1)) {}

  explicit Tensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(std::move(shape)) {
    check_extents();
    values_ = Vector<Scalar>::Constant(static_cast<Eigen::Index>(numel(shape_)),
                                       fill);
  }

  Tensor(Shape shape, Vector<Scalar> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    check_extents();
    if (static_cast<std::size_t>(values_.size()) != numel(shape_)) {
      throw DimensionError("tensor: " + std::to_string(values_.size()) +
                           " values do not fill shape " + shape_str(shape_));
    }
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values)
      : Tensor(std::move(shape),
               Vector<Scalar>(Eigen::Map<const Vector<Scalar>>(
                   values.begin(), static_cast<Eigen::Index>(values.size())))) {}

  static Tensor scalar(Scalar value) { return Tensor(Shape{}, value); }

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  /// Extent of axis `axis`; negative values count from the back.
  std::size_t extent(int axis) const {
    return shape_.at(normalize_axis(axis, rank()));
  }

  Vector<Scalar> &values() { return values_; }
  const Vector<Scalar> &values() const { return values_; }
  Scalar *data() { return values_.data(); }
  const Scalar *data() const { return values_.data(); }

  Scalar &operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }
  Scalar operator[](std::size_t i) const {
    return values_[static_cast<Eigen::Index>(i)];
  }

  bool requires_grad() const { return requires_grad_; }

  void set_requires_grad(bool on) {
    requires_grad_ = on;
    grad_ = on ? Vector<Scalar>::Zero(values_.size()) : Vector<Scalar>();
  }

  Vector<Scalar> &grad() {
    if (!requires_grad_) {
      throw ContractError("tensor " + shape_str(shape_) +
                          " does not carry a gradient");
    }
    return grad_;
  }
  const Vector<Scalar> &grad() const {
    return const_cast<Tensor *>(this)->grad();
  }

  void zero_grad() {
    if (requires_grad_) grad_.setZero(values_.size());
  }

  /// Row-major view of the data as a (rows x cols) matrix.
  Eigen::Map<RowMatrix<Scalar>> matrix(std::size_t rows, std::size_t cols) {
    return {values_.data(), static_cast<Eigen::Index>(rows),
            static_cast<Eigen::Index>(cols)};
  }
  Eigen::Map<const RowMatrix<Scalar>> matrix(std::size_t rows,
                                             std::size_t cols) const {
    return {values_.data(), static_cast<Eigen::Index>(rows),
            static_cast<Eigen::Index>(cols)};
  }

  void reshape(Shape shape) {
    if (numel(shape) != numel(shape_)) {
      throw DimensionError("reshape " + shape_str(shape_) + " -> " +
                           shape_str(shape));
    }
    shape_ = std::move(shape);
  }

  bool all_finite() const { return values_.allFinite(); }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_, values_.template cast<Other>().eval());
    if (requires_grad_) {
      out.set_requires_grad(true);
      out.grad() = grad_.template cast<Other>();
    }
    return out;
  }

  static std::size_t normalize_axis(int axis, std::size_t rank) {
    const int r = static_cast<int>(rank);
    const int a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) {
      throw DimensionError("axis " + std::to_string(axis) +
                           " out of range for rank " + std::to_string(rank));
    }
    return static_cast<std::size_t>(a);
  }

 private:
  void check_extents() const {
    for (auto e : shape_) {
      if (e == 0) throw DimensionError("zero extent in shape " + shape_str(shape_));
    }
  }

  Shape shape_;
  Vector<Scalar> values_;
  bool requires_grad_ = false;
  Vector<Scalar> grad_;
};

} // namespace atraj

#endif // ATRAJ_TENSOR_HPP_
