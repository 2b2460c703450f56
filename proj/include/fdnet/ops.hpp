// SPDX-License-Identifier: Apache-2.0
//
// Layer kernels on NCHW tensors.
//
// Each op comes in two forms: an `_into` variant that writes into caller-owned
// memory (used by the engine's preallocated activation buffers), and a
// value-returning convenience wrapper. Naive counterparts live in
// reference_ops.hpp and serve as oracles for everything here.
#ifndef FDNET_OPS_HPP
#define FDNET_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fdnet/detail/parallel.hpp"
#include "fdnet/tensor.hpp"

namespace fdnet {

/// Convolution filter bank.
///
/// Standard convolution: kernel shape (c_out, c_in, k, k).
/// Depthwise convolution: kernel shape (c, 1, k, k).
/// Fully connected layers reuse the type with shape (out, in, 1, 1).
/// An empty bias means zero bias.
template <typename Scalar>
struct ConvWeights {
  Tensor<Scalar> kernel;
  std::vector<Scalar> bias;

  Index out_channels() const { return kernel.shape().n; }
  Index in_channels() const { return kernel.shape().c; }
  Index size() const { return kernel.shape().h; }
  bool has_bias() const { return !bias.empty(); }

  void check() const {
    const Shape& s = kernel.shape();
    if (s.h != s.w || s.h % 2 == 0)
      throw ShapeError("conv kernel must be square with odd size, got " + to_string(s));
    if (has_bias() && static_cast<Index>(bias.size()) != s.n)
      throw ShapeError("conv bias length " + std::to_string(bias.size()) + " != c_out " +
                       std::to_string(s.n));
  }
};

/// Per-channel batch-norm statistics and affine parameters.
template <typename Scalar>
struct BnParams {
  std::vector<Scalar> gamma;
  std::vector<Scalar> beta;
  std::vector<Scalar> mean;
  std::vector<Scalar> var;
  Scalar epsilon = Scalar(1e-5);

  Index channels() const { return static_cast<Index>(gamma.size()); }

  static BnParams identity(Index c) {
    const auto n = static_cast<std::size_t>(c);
    return {std::vector<Scalar>(n, Scalar(1)), std::vector<Scalar>(n, Scalar(0)),
            std::vector<Scalar>(n, Scalar(0)), std::vector<Scalar>(n, Scalar(1))};
  }

  void check(Index expected_channels) const {
    const auto n = static_cast<std::size_t>(expected_channels);
    if (gamma.size() != n || beta.size() != n || mean.size() != n || var.size() != n)
      throw ShapeError("batch-norm parameters sized for " + std::to_string(gamma.size()) +
                       " channels, expected " + std::to_string(expected_channels));
    if (!(epsilon > Scalar(0))) throw std::invalid_argument("batch-norm epsilon must be positive");
    for (Scalar v : var)
      if (v < Scalar(0)) throw std::invalid_argument("batch-norm running variance is negative");
  }
};

/// Output shape of a k x k window op with the given stride and padding.
inline Shape conv_output_shape(const Shape& in, Index c_out, Index kernel, Index stride, Index pad) {
  const Index oh = conv_output_dim(in.h, kernel, stride, pad);
  const Index ow = conv_output_dim(in.w, kernel, stride, pad);
  return {in.n, c_out, oh, ow};
}

namespace detail {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void expect_shape(const Shape& got, const Shape& want, const char* op) {
  if (got != want)
    throw ShapeError(std::string(op) + ": output buffer is " + to_string(got) + ", expected " +
                     to_string(want));
}

// Valid output range [lo, hi) for a tap at offset `tap` so that the input
// coordinate o*stride - pad + tap stays inside [0, extent).
inline void tap_range(Index tap, Index extent, Index out_extent, Index stride, Index pad, Index& lo,
                      Index& hi) {
  const Index shift = tap - pad;
  lo = shift >= 0 ? 0 : (-shift + stride - 1) / stride;
  const Index last = extent - 1 - shift;
  hi = last < 0 ? 0 : std::min(out_extent, last / stride + 1);
  lo = std::min(lo, hi);
}

}  // namespace detail

/// Scratch elements needed by conv2d_into for an input of this shape.
template <typename Scalar>
Index conv2d_scratch_size(const Shape& in, const ConvWeights<Scalar>& w, Index stride, Index pad) {
  const Index k = w.size();
  if (k == 1 && stride == 1 && pad == 0) return 0;
  const Shape out = conv_output_shape(in, w.out_channels(), k, stride, pad);
  return in.c * k * k * out.plane();
}

/// Standard convolution via patch gathering (im2col) and a dense matrix product.
template <typename Scalar>
void conv2d_into(TensorMap<const Scalar> in, const ConvWeights<Scalar>& w, Index stride, Index pad,
                 TensorMap<Scalar> out, std::span<Scalar> scratch, int threads = 1) {
  w.check();
  const Shape& is = in.shape();
  if (is.c != w.in_channels())
    throw ShapeError("conv2d: input has " + std::to_string(is.c) + " channels, weights expect " +
                     std::to_string(w.in_channels()));
  const Index k = w.size();
  const Shape os = conv_output_shape(is, w.out_channels(), k, stride, pad);
  detail::expect_shape(out.shape(), os, "conv2d");

  const Index rows = is.c * k * k;
  const Index cols = os.plane();
  const bool direct = (k == 1 && stride == 1 && pad == 0);
  if (!direct && static_cast<Index>(scratch.size()) < rows * cols)
    throw std::invalid_argument("conv2d: scratch buffer too small");

  using Mat = detail::RowMatrix<Scalar>;
  Eigen::Map<const Mat> weights(w.kernel.data(), w.out_channels(), rows);

  for (Index n = 0; n < is.n; ++n) {
    const Scalar* src = in.plane(n, 0);
    if (!direct) {
      Scalar* col = scratch.data();
      detail::parallel_for(is.c, threads, [&](Index ci) {
        const Scalar* plane = src + ci * is.plane();
        for (Index dy = 0; dy < k; ++dy) {
          for (Index dx = 0; dx < k; ++dx) {
            Scalar* row = col + ((ci * k + dy) * k + dx) * cols;
            Index x_lo, x_hi;
            detail::tap_range(dx, is.w, os.w, stride, pad, x_lo, x_hi);
            for (Index oy = 0; oy < os.h; ++oy) {
              Scalar* dst = row + oy * os.w;
              const Index iy = oy * stride - pad + dy;
              if (iy < 0 || iy >= is.h) {
                std::fill(dst, dst + os.w, Scalar(0));
                continue;
              }
              const Scalar* line = plane + iy * is.w;
              const Index shift = dx - pad;
              std::fill(dst, dst + x_lo, Scalar(0));
              for (Index ox = x_lo; ox < x_hi; ++ox) dst[ox] = line[ox * stride + shift];
              std::fill(dst + x_hi, dst + os.w, Scalar(0));
            }
          }
        }
      });
      src = col;
    }
    Eigen::Map<const Mat> patches(src, rows, cols);
    Eigen::Map<Mat> result(out.plane(n, 0), os.c, cols);
    result.noalias() = weights * patches;
    if (w.has_bias()) {
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> bias(w.bias.data(), os.c);
      result.colwise() += bias;
    }
  }
}

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& in, const ConvWeights<Scalar>& w, Index stride,
                      Index pad) {
  w.check();
  Tensor<Scalar> out(conv_output_shape(in.shape(), w.out_channels(), w.size(), stride, pad));
  std::vector<Scalar> scratch(static_cast<std::size_t>(conv2d_scratch_size(in.shape(), w, stride, pad)));
  conv2d_into<Scalar>(in.map(), w, stride, pad, out.map(), scratch);
  return out;
}

/// 1x1 convolution: a matrix product over the channel dimension.
template <typename Scalar>
void pointwise_conv2d_into(TensorMap<const Scalar> in, const ConvWeights<Scalar>& w,
                           TensorMap<Scalar> out) {
  if (w.size() != 1) throw ShapeError("pointwise_conv2d: kernel must be 1x1");
  conv2d_into<Scalar>(in, w, 1, 0, out, {});
}

template <typename Scalar>
Tensor<Scalar> pointwise_conv2d(const Tensor<Scalar>& in, const ConvWeights<Scalar>& w) {
  if (w.size() != 1) throw ShapeError("pointwise_conv2d: kernel must be 1x1");
  Tensor<Scalar> out(conv_output_shape(in.shape(), w.out_channels(), 1, 1, 0));
  pointwise_conv2d_into<Scalar>(in.map(), w, out.map());
  return out;
}

/// Per-channel spatial filtering; channel planes are processed independently.
template <typename Scalar>
void depthwise_conv2d_into(TensorMap<const Scalar> in, const ConvWeights<Scalar>& w, Index stride,
                           Index pad, TensorMap<Scalar> out, int threads = 1) {
  w.check();
  const Shape& is = in.shape();
  if (w.in_channels() != 1)
    throw ShapeError("depthwise_conv2d: weights must have shape (c, 1, k, k), got " +
                     to_string(w.kernel.shape()));
  if (is.c != w.out_channels())
    throw ShapeError("depthwise_conv2d: input has " + std::to_string(is.c) +
                     " channels, weights expect " + std::to_string(w.out_channels()));
  const Index k = w.size();
  const Shape os = conv_output_shape(is, is.c, k, stride, pad);
  detail::expect_shape(out.shape(), os, "depthwise_conv2d");

  // Valid output-column range per horizontal tap, shared by every row.
  std::vector<Index> x_lo(static_cast<std::size_t>(k)), x_hi(static_cast<std::size_t>(k));
  for (Index dx = 0; dx < k; ++dx)
    detail::tap_range(dx, is.w, os.w, stride, pad, x_lo[dx], x_hi[dx]);

  detail::parallel_for(is.n * is.c, threads, [&](Index nc) {
    const Index n = nc / is.c;
    const Index c = nc % is.c;
    const Scalar* src = in.plane(n, c);
    const Scalar* filt = w.kernel.data() + c * k * k;
    Scalar* dst_plane = out.plane(n, c);
    const Scalar b = w.has_bias() ? w.bias[static_cast<std::size_t>(c)] : Scalar(0);
    for (Index oy = 0; oy < os.h; ++oy) {
      Scalar* dst = dst_plane + oy * os.w;
      std::fill(dst, dst + os.w, b);
      for (Index dy = 0; dy < k; ++dy) {
        const Index iy = oy * stride - pad + dy;
        if (iy < 0 || iy >= is.h) continue;
        const Scalar* line = src + iy * is.w;
        for (Index dx = 0; dx < k; ++dx) {
          const Scalar wt = filt[dy * k + dx];
          const Index shift = dx - pad;
          const Index lo = x_lo[dx], hi = x_hi[dx];
          if (stride == 1) {
            const Scalar* base = line + (lo + shift);
            Scalar* acc = dst + lo;
            for (Index j = 0; j < hi - lo; ++j) acc[j] += wt * base[j];
          } else {
            for (Index ox = lo; ox < hi; ++ox) dst[ox] += wt * line[ox * stride + shift];
          }
        }
      }
    }
  });
}

template <typename Scalar>
Tensor<Scalar> depthwise_conv2d(const Tensor<Scalar>& in, const ConvWeights<Scalar>& w, Index stride,
                                Index pad) {
  w.check();
  Tensor<Scalar> out(conv_output_shape(in.shape(), in.shape().c, w.size(), stride, pad));
  depthwise_conv2d_into<Scalar>(in.map(), w, stride, pad, out.map());
  return out;
}

template <typename Scalar>
void batch_norm_into(TensorMap<const Scalar> in, const BnParams<Scalar>& p, TensorMap<Scalar> out) {
  const Shape& s = in.shape();
  p.check(s.c);
  detail::expect_shape(out.shape(), s, "batch_norm");
  for (Index c = 0; c < s.c; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double scale = double(p.gamma[i]) / std::sqrt(double(p.var[i]) + double(p.epsilon));
    const double shift = double(p.beta[i]) - double(p.mean[i]) * scale;
    const auto a = static_cast<Scalar>(scale);
    const auto b = static_cast<Scalar>(shift);
    for (Index n = 0; n < s.n; ++n) {
      const Scalar* src = in.plane(n, c);
      Scalar* dst = out.plane(n, c);
      for (Index j = 0; j < s.plane(); ++j) dst[j] = a * src[j] + b;
    }
  }
}

template <typename Scalar>
Tensor<Scalar> batch_norm(const Tensor<Scalar>& in, const BnParams<Scalar>& p) {
  Tensor<Scalar> out(in.shape());
  batch_norm_into<Scalar>(in.map(), p, out.map());
  return out;
}

/// Absorbs a following batch norm into the convolution's weights and bias.
///
/// Works for standard, depthwise and 1x1 filter banks alike: output channel o
/// is scaled by gamma[o] / sqrt(var[o] + eps), and the bias becomes
/// (bias[o] - mean[o]) * scale + beta[o].
template <typename Scalar>
ConvWeights<Scalar> fold_bn_into_conv(const ConvWeights<Scalar>& w, const BnParams<Scalar>& p) {
  p.check(w.out_channels());
  ConvWeights<Scalar> folded{w.kernel, std::vector<Scalar>(static_cast<std::size_t>(w.out_channels()))};
  const Index per_out = w.kernel.size() / w.out_channels();
  for (Index o = 0; o < w.out_channels(); ++o) {
    const auto i = static_cast<std::size_t>(o);
    const double scale = double(p.gamma[i]) / std::sqrt(double(p.var[i]) + double(p.epsilon));
    Scalar* row = folded.kernel.data() + o * per_out;
    for (Index j = 0; j < per_out; ++j) row[j] = static_cast<Scalar>(double(row[j]) * scale);
    const double b = w.has_bias() ? double(w.bias[i]) : 0.0;
    folded.bias[i] = static_cast<Scalar>((b - double(p.mean[i])) * scale + double(p.beta[i]));
  }
  return folded;
}

template <typename Scalar>
void relu_into(TensorMap<const Scalar> in, TensorMap<Scalar> out) {
  detail::expect_shape(out.shape(), in.shape(), "relu");
  const Scalar* src = in.data();
  Scalar* dst = out.data();
  for (Index i = 0; i < in.size(); ++i) dst[i] = std::max(src[i], Scalar(0));
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& in) {
  Tensor<Scalar> out(in.shape());
  relu_into<Scalar>(in.map(), out.map());
  return out;
}

template <typename Scalar>
void global_avg_pool_into(TensorMap<const Scalar> in, TensorMap<Scalar> out) {
  const Shape& s = in.shape();
  detail::expect_shape(out.shape(), Shape{s.n, s.c, 1, 1}, "global_avg_pool");
  const Scalar inv = Scalar(1) / static_cast<Scalar>(s.plane());
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c) {
      Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>> plane(in.plane(n, c), s.plane());
      *out.plane(n, c) = plane.sum() * inv;
    }
}

template <typename Scalar>
Tensor<Scalar> global_avg_pool(const Tensor<Scalar>& in) {
  Tensor<Scalar> out(Shape{in.shape().n, in.shape().c, 1, 1});
  global_avg_pool_into<Scalar>(in.map(), out.map());
  return out;
}

/// y = W x + b per sample; x is the flattened (c, h, w) feature vector.
/// Weights have shape (out, in, 1, 1).
template <typename Scalar>
void fully_connected_into(TensorMap<const Scalar> in, const ConvWeights<Scalar>& w,
                          TensorMap<Scalar> out) {
  const Shape& s = in.shape();
  const Index features = s.c * s.plane();
  if (w.size() != 1 || w.in_channels() != features)
    throw ShapeError("fully_connected: weights " + to_string(w.kernel.shape()) +
                     " do not accept input " + to_string(s));
  if (w.has_bias() && static_cast<Index>(w.bias.size()) != w.out_channels())
    throw ShapeError("fully_connected: bias length mismatch");
  detail::expect_shape(out.shape(), Shape{s.n, w.out_channels(), 1, 1}, "fully_connected");

  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Eigen::Map<const detail::RowMatrix<Scalar>> weights(w.kernel.data(), w.out_channels(), features);
  for (Index n = 0; n < s.n; ++n) {
    Eigen::Map<const Vec> x(in.plane(n, 0), features);
    Eigen::Map<Vec> y(out.plane(n, 0), w.out_channels());
    y.noalias() = weights * x;
    if (w.has_bias()) y += Eigen::Map<const Vec>(w.bias.data(), w.out_channels());
  }
}

template <typename Scalar>
Tensor<Scalar> fully_connected(const Tensor<Scalar>& in, const ConvWeights<Scalar>& w) {
  Tensor<Scalar> out(Shape{in.shape().n, w.out_channels(), 1, 1});
  fully_connected_into<Scalar>(in.map(), w, out.map());
  return out;
}

/// Softmax across the channel dimension at every (n, h, w) location.
template <typename Scalar>
void softmax_into(TensorMap<const Scalar> in, TensorMap<Scalar> out) {
  const Shape& s = in.shape();
  detail::expect_shape(out.shape(), s, "softmax");
  const Index stride = s.plane();
  for (Index n = 0; n < s.n; ++n)
    for (Index p = 0; p < stride; ++p) {
      const Scalar* src = in.plane(n, 0) + p;
      Scalar* dst = out.plane(n, 0) + p;
      Scalar peak = src[0];
      for (Index c = 1; c < s.c; ++c) peak = std::max(peak, src[c * stride]);
      double total = 0.0;
      for (Index c = 0; c < s.c; ++c) {
        const Scalar e = std::exp(src[c * stride] - peak);
        dst[c * stride] = e;
        total += e;
      }
      const auto inv = static_cast<Scalar>(1.0 / total);
      for (Index c = 0; c < s.c; ++c) dst[c * stride] *= inv;
    }
}

template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& in) {
  Tensor<Scalar> out(in.shape());
  softmax_into<Scalar>(in.map(), out.map());
  return out;
}

}  // namespace fdnet

#endif  // FDNET_OPS_HPP
