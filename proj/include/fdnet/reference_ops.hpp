// SPDX-License-Identifier: Apache-2.0
//
// Naive reference kernels. Straight loops over the definitions, double
// accumulation, no shared code with ops.hpp beyond the shared types. These
// are the oracles the optimized kernels and the engine are checked against.
//
// The convolution references optionally count every multiply-accumulate they
// perform (padding taps included), which gives a brute-force MAC count.
#ifndef FDNET_REFERENCE_OPS_HPP
#define FDNET_REFERENCE_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "fdnet/ops.hpp"
#include "fdnet/tensor.hpp"

namespace fdnet::reference {

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& in, const ConvWeights<Scalar>& w, Index stride,
                      Index pad, std::uint64_t* macs = nullptr) {
  const Shape& is = in.shape();
  const Shape& ks = w.kernel.shape();
  if (is.c != ks.c) throw ShapeError("reference::conv2d: channel mismatch");
  const Index k = ks.h;
  Tensor<Scalar> out(Shape{is.n, ks.n, conv_output_dim(is.h, k, stride, pad),
                           conv_output_dim(is.w, k, stride, pad)});
  const Shape& os = out.shape();
  for (Index n = 0; n < os.n; ++n)
    for (Index o = 0; o < os.c; ++o)
      for (Index y = 0; y < os.h; ++y)
        for (Index x = 0; x < os.w; ++x) {
          double acc = w.has_bias() ? double(w.bias[static_cast<std::size_t>(o)]) : 0.0;
          for (Index i = 0; i < is.c; ++i)
            for (Index dy = 0; dy < k; ++dy)
              for (Index dx = 0; dx < k; ++dx) {
                const Index iy = y * stride - pad + dy;
                const Index ix = x * stride - pad + dx;
                const bool inside = iy >= 0 && iy < is.h && ix >= 0 && ix < is.w;
                const double v = inside ? double(in(n, i, iy, ix)) : 0.0;
                acc += v * double(w.kernel(o, i, dy, dx));
                if (macs) ++*macs;
              }
          out(n, o, y, x) = static_cast<Scalar>(acc);
        }
  return out;
}

template <typename Scalar>
Tensor<Scalar> depthwise_conv2d(const Tensor<Scalar>& in, const ConvWeights<Scalar>& w,
                                Index stride, Index pad, std::uint64_t* macs = nullptr) {
  const Shape& is = in.shape();
  const Shape& ks = w.kernel.shape();
  if (ks.c != 1 || ks.n != is.c) throw ShapeError("reference::depthwise_conv2d: channel mismatch");
  const Index k = ks.h;
  Tensor<Scalar> out(Shape{is.n, is.c, conv_output_dim(is.h, k, stride, pad),
                           conv_output_dim(is.w, k, stride, pad)});
  const Shape& os = out.shape();
  for (Index n = 0; n < os.n; ++n)
    for (Index c = 0; c < os.c; ++c)
      for (Index y = 0; y < os.h; ++y)
        for (Index x = 0; x < os.w; ++x) {
          double acc = w.has_bias() ? double(w.bias[static_cast<std::size_t>(c)]) : 0.0;
          for (Index dy = 0; dy < k; ++dy)
            for (Index dx = 0; dx < k; ++dx) {
              const Index iy = y * stride - pad + dy;
              const Index ix = x * stride - pad + dx;
              const bool inside = iy >= 0 && iy < is.h && ix >= 0 && ix < is.w;
              const double v = inside ? double(in(n, c, iy, ix)) : 0.0;
              acc += v * double(w.kernel(c, 0, dy, dx));
              if (macs) ++*macs;
            }
          out(n, c, y, x) = static_cast<Scalar>(acc);
        }
  return out;
}

template <typename Scalar>
Tensor<Scalar> batch_norm(const Tensor<Scalar>& in, const BnParams<Scalar>& p) {
  const Shape& s = in.shape();
  if (p.channels() != s.c) throw ShapeError("reference::batch_norm: channel mismatch");
  Tensor<Scalar> out(s);
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c) {
      const auto i = static_cast<std::size_t>(c);
      const double denom = std::sqrt(double(p.var[i]) + double(p.epsilon));
      for (Index y = 0; y < s.h; ++y)
        for (Index x = 0; x < s.w; ++x)
          out(n, c, y, x) = static_cast<Scalar>(
              double(p.gamma[i]) * (double(in(n, c, y, x)) - double(p.mean[i])) / denom +
              double(p.beta[i]));
    }
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& in) {
  Tensor<Scalar> out(in.shape());
  for (Index i = 0; i < in.size(); ++i) out[i] = in[i] > Scalar(0) ? in[i] : Scalar(0);
  return out;
}

template <typename Scalar>
Tensor<Scalar> global_avg_pool(const Tensor<Scalar>& in) {
  const Shape& s = in.shape();
  Tensor<Scalar> out(Shape{s.n, s.c, 1, 1});
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c) {
      double acc = 0.0;
      for (Index y = 0; y < s.h; ++y)
        for (Index x = 0; x < s.w; ++x) acc += double(in(n, c, y, x));
      out(n, c, 0, 0) = static_cast<Scalar>(acc / double(s.h * s.w));
    }
  return out;
}

template <typename Scalar>
Tensor<Scalar> fully_connected(const Tensor<Scalar>& in, const ConvWeights<Scalar>& w,
                               std::uint64_t* macs = nullptr) {
  const Shape& s = in.shape();
  const Index features = s.c * s.h * s.w;
  if (w.kernel.shape().c != features) throw ShapeError("reference::fully_connected: size mismatch");
  const Index outs = w.kernel.shape().n;
  Tensor<Scalar> out(Shape{s.n, outs, 1, 1});
  for (Index n = 0; n < s.n; ++n)
    for (Index o = 0; o < outs; ++o) {
      double acc = w.has_bias() ? double(w.bias[static_cast<std::size_t>(o)]) : 0.0;
      for (Index f = 0; f < features; ++f) {
        acc += double(in[n * features + f]) * double(w.kernel[o * features + f]);
        if (macs) ++*macs;
      }
      out(n, o, 0, 0) = static_cast<Scalar>(acc);
    }
  return out;
}

template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& in) {
  const Shape& s = in.shape();
  Tensor<Scalar> out(s);
  for (Index n = 0; n < s.n; ++n)
    for (Index y = 0; y < s.h; ++y)
      for (Index x = 0; x < s.w; ++x) {
        double peak = double(in(n, 0, y, x));
        for (Index c = 1; c < s.c; ++c) peak = std::max(peak, double(in(n, c, y, x)));
        double total = 0.0;
        for (Index c = 0; c < s.c; ++c) total += std::exp(double(in(n, c, y, x)) - peak);
        for (Index c = 0; c < s.c; ++c)
          out(n, c, y, x) = static_cast<Scalar>(std::exp(double(in(n, c, y, x)) - peak) / total);
      }
  return out;
}

}  // namespace fdnet::reference

#endif  // FDNET_REFERENCE_OPS_HPP
