// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_TENSOR_HPP
#define FDNET_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdnet {

using Index = std::ptrdiff_t;

/// Raised when tensor shapes or channel counts do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense NCHW extent. Every dimension is at least 1.
struct Shape {
  Index n = 1;
  Index c = 1;
  Index h = 1;
  Index w = 1;

  constexpr Index size() const { return n * c * h * w; }
  constexpr Index plane() const { return h * w; }
  constexpr bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

inline std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << to_string(s); }

/// Row-major offset of element (n, c, h, w).
constexpr Index flat_index(const Shape& s, Index n, Index c, Index h, Index w) {
  return ((n * s.c + c) * s.h + h) * s.w + w;
}

/// Output extent of a strided window: floor((in + 2*pad - kernel) / stride) + 1.
inline Index conv_output_dim(Index in_dim, Index kernel, Index stride, Index pad) {
  if (kernel < 1 || stride < 1 || pad < 0 || in_dim < 1)
    throw std::invalid_argument("conv_output_dim: kernel, stride and input must be positive");
  if (in_dim + 2 * pad < kernel)
    throw std::invalid_argument("conv_output_dim: window of " + std::to_string(kernel) +
                                " does not fit padded input of " + std::to_string(in_dim + 2 * pad));
  return (in_dim + 2 * pad - kernel) / stride + 1;
}

/// Non-owning view over NCHW data, in the spirit of Eigen::Map.
template <typename Scalar>
class TensorMap {
 public:
  TensorMap() = default;
  TensorMap(Scalar* data, Shape shape) : data_(data), shape_(shape) {}

  const Shape& shape() const { return shape_; }
  Index size() const { return shape_.size(); }
  Scalar* data() const { return data_; }
  std::span<Scalar> span() const { return {data_, static_cast<std::size_t>(size())}; }

  Scalar& operator()(Index n, Index c, Index h, Index w) const {
    return data_[flat_index(shape_, n, c, h, w)];
  }
  /// Start of channel plane (n, c).
  Scalar* plane(Index n, Index c) const { return data_ + (n * shape_.c + c) * shape_.plane(); }

  operator TensorMap<const Scalar>() const { return {data_, shape_}; }

 private:
  Scalar* data_ = nullptr;
  Shape shape_;
};

/// Owning dense NCHW tensor.
template <typename Scalar = float>
class Tensor {
 public:
  using value_type = Scalar;

  Tensor() : Tensor(Shape{}) {}
  explicit Tensor(Shape shape, Scalar fill = Scalar(0)) : shape_(checked(shape)) {
    data_.assign(static_cast<std::size_t>(shape_.size()), fill);
  }
  Tensor(Shape shape, std::vector<Scalar> data) : shape_(checked(shape)), data_(std::move(data)) {
    if (static_cast<Index>(data_.size()) != shape_.size())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> span() { return data_; }
  std::span<const Scalar> span() const { return data_; }
  const std::vector<Scalar>& values() const { return data_; }

  Scalar& operator()(Index n, Index c, Index h, Index w) {
    return data_[static_cast<std::size_t>(flat_index(shape_, n, c, h, w))];
  }
  const Scalar& operator()(Index n, Index c, Index h, Index w) const {
    return data_[static_cast<std::size_t>(flat_index(shape_, n, c, h, w))];
  }
  Scalar& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  const Scalar& operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

  TensorMap<Scalar> map() { return {data_.data(), shape_}; }
  TensorMap<const Scalar> map() const { return {data_.data(), shape_}; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static Shape checked(Shape s) {
    if (!s.valid()) throw ShapeError("tensor dims must all be >= 1, got " + to_string(s));
    return s;
  }

  Shape shape_;
  std::vector<Scalar> data_;
};

using Tensorf = Tensor<float>;

/// Largest absolute elementwise difference; shapes must agree.
template <typename A, typename B>
double max_abs_diff(const Tensor<A>& a, const Tensor<B>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("max_abs_diff: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

}  // namespace fdnet

#endif  // FDNET_TENSOR_HPP
