#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "covnmt/errors.hpp"

namespace covnmt {

// Every tensor in the engine is a row-major matrix; vectors are 1 x n rows
// unless an operation documents otherwise.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
  }
};

namespace detail {

template <typename T>
struct TensorData {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until a backward pass touches it
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

}  // namespace detail

template <typename T>
class Tape;

// Shared handle to a dense matrix that may take part in a differentiation
// tape. Copies alias the same storage; use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : data_(std::make_shared<detail::TensorData<T>>()) {
    check_extents(shape);
    data_->shape = shape;
    data_->value.assign(shape.size(), T(0));
    data_->requires_grad = requires_grad;
  }

  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false)
      : data_(std::make_shared<detail::TensorData<T>>()) {
    check_extents(shape);
    if (values.size() != shape.size())
      throw DimensionError("tensor " + shape.str() + " given " +
                           std::to_string(values.size()) + " values");
    data_->shape = shape;
    data_->value = std::move(values);
    data_->requires_grad = requires_grad;
  }

  static Tensor row(std::vector<T> values, bool requires_grad = false) {
    const Shape shape{1, values.size()};
    return Tensor(shape, std::move(values), requires_grad);
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return Tensor(Shape{1, 1}, {value}, requires_grad);
  }

  static Tensor filled(Shape shape, T value) {
    return Tensor(shape, std::vector<T>(shape.size(), value));
  }

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return data_->shape; }
  std::size_t rows() const { return data_->shape.rows; }
  std::size_t cols() const { return data_->shape.cols; }
  std::size_t size() const { return data_->value.size(); }

  std::span<T> values() { return data_->value; }
  std::span<const T> values() const { return data_->value; }
  T& operator()(std::size_t r, std::size_t c) { return data_->value[r * cols() + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data_->value[r * cols() + c]; }
  // Value of a 1 x 1 tensor.
  T item() const {
    if (size() != 1) throw DimensionError("item() on tensor " + shape().str());
    return data_->value[0];
  }

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool on) { data_->requires_grad = on; }

  bool has_grad() const { return data_->grad.size() == data_->value.size(); }
  std::span<T> grad() {
    data_->ensure_grad();
    return data_->grad;
  }
  std::span<const T> grad() const {
    data_->ensure_grad();
    return data_->grad;
  }
  void zero_grad() {
    if (has_grad()) std::fill(data_->grad.begin(), data_->grad.end(), T(0));
  }

  Tensor clone() const {
    Tensor out(shape(), data_->value, requires_grad());
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> converted(data_->value.begin(), data_->value.end());
    return Tensor<U>(shape(), std::move(converted), requires_grad());
  }

  bool same_storage(const Tensor& other) const { return data_ == other.data_; }

 private:
  friend class Tape<T>;

  static void check_extents(const Shape& shape) {
    if (shape.rows == 0 || shape.cols == 0)
      throw DimensionError("tensor extents must be positive, got " + shape.str());
  }

  std::shared_ptr<detail::TensorData<T>> data_;
};

using Mask = std::vector<std::uint8_t>;

}  // namespace covnmt
