// SPDX-License-Identifier: Apache-2.0
#include "fdnet/engine.hpp"

#include <algorithm>
#include <string>

namespace fdnet {

namespace {

std::size_t bytes_of(const Shape& s) { return static_cast<std::size_t>(s.size()) * sizeof(float); }

std::uint32_t ordinal(std::size_t i) { return static_cast<std::uint32_t>(i); }

// Standalone batch norm as a 1x1 depthwise convolution with bias.
CompiledLayer batch_norm_as_conv(const BnParams<float>& bn) {
  const Index c = bn.channels();
  const ConvWeights<float> unit{Tensorf(Shape{c, 1, 1, 1}, 1.0f), {}};
  return {depthwise_conv(c, 1, 1), fold_bn_into_conv(unit, bn)};
}

}  // namespace

MemoryPlan plan_memory(const ArchitectureSpec& spec) {
  require_valid(spec);
  MemoryPlan plan;
  std::size_t largest = bytes_of(spec.input);
  Shape shape = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Shape out = layer_output_shape(l, shape);
    largest = std::max(largest, bytes_of(out));
    if (l.kind == LayerKind::standard_conv && !(l.kernel == 1 && l.stride == 1 && l.pad == 0)) {
      const auto cols = static_cast<std::size_t>(out.plane());
      plan.scratch_bytes = std::max(
          plan.scratch_bytes, static_cast<std::size_t>(l.c_in * l.kernel * l.kernel) * cols * sizeof(float));
    }
    const int in = static_cast<int>(i % 2);
    plan.assignment.push_back({in, 1 - in});
    shape = out;
  }
  plan.buffer_bytes = largest;
  return plan;
}

Workspace::Workspace(const MemoryPlan& plan)
    : activation_stats_(std::make_unique<AllocationStats>()),
      scratch_(plan.scratch_bytes / sizeof(float)) {
  const std::size_t floats = plan.buffer_bytes / sizeof(float);
  buffers_.reserve(plan.buffer_count);
  for (std::size_t i = 0; i < plan.buffer_count; ++i)
    buffers_.emplace_back(floats, 0.0f, CountingAllocator<float>(activation_stats_.get()));
}

std::span<float> Workspace::buffer(int id) { return buffers_.at(static_cast<std::size_t>(id)); }

bool Workspace::fits(const MemoryPlan& plan) const {
  if (buffers_.size() < plan.buffer_count) return false;
  for (const auto& b : buffers_)
    if (b.size() * sizeof(float) < plan.buffer_bytes) return false;
  return scratch_.size() * sizeof(float) >= plan.scratch_bytes;
}

Engine compile(const ArchitectureSpec& spec, const WeightStore& store, EngineOptions options) {
  require_valid(spec);
  check_store(spec, store);

  Engine engine;
  engine.options_ = options;
  engine.spec_.name = spec.name;
  engine.spec_.alpha = spec.alpha;
  engine.spec_.input = spec.input;

  const auto& layers = spec.layers;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    CompiledLayer compiled{l, {}};
    if (is_conv(l.kind)) {
      compiled.weights = store.conv_weights(ordinal(i));
      if (i + 1 < layers.size() && layers[i + 1].kind == LayerKind::batch_norm) {
        compiled.weights = fold_bn_into_conv(compiled.weights, store.bn_params(ordinal(i + 1)));
        ++i;
      }
    } else if (l.kind == LayerKind::fully_connected) {
      compiled.weights = store.fc_weights(ordinal(i));
    } else if (l.kind == LayerKind::batch_norm) {
      compiled = batch_norm_as_conv(store.bn_params(ordinal(i)));
    }
    engine.spec_.layers.push_back(compiled.spec);
    engine.layers_.push_back(std::move(compiled));
  }
  engine.plan_ = plan_memory(engine.spec_);
  return engine;
}

Tensorf Engine::infer(const Tensorf& input) const {
  Workspace ws(plan_);
  return infer(input, ws);
}

Tensorf Engine::infer(const Tensorf& input, Workspace& workspace) const {
  return run(input, workspace, layers_.size());
}

Tensorf Engine::logits(const Tensorf& input) const {
  std::size_t count = layers_.size();
  if (count > 0 && layers_.back().spec.kind == LayerKind::softmax) --count;
  Workspace ws(plan_);
  return run(input, ws, count);
}

Tensorf Engine::run(const Tensorf& input, Workspace& ws, std::size_t layer_count) const {
  if (input.shape() != spec_.input)
    throw ShapeError("engine input is " + to_string(input.shape()) + ", network expects " +
                     to_string(spec_.input));
  if (!ws.fits(plan_)) throw std::invalid_argument("workspace is smaller than the memory plan");

  std::copy(input.span().begin(), input.span().end(), ws.buffer(0).begin());
  Shape shape = input.shape();
  const int threads = options_.threads;

  for (std::size_t i = 0; i < layer_count; ++i) {
    const CompiledLayer& layer = layers_[i];
    const LayerSpec& l = layer.spec;
    const BufferAssignment& a = plan_.assignment[i];
    const Shape out_shape = layer_output_shape(l, shape);
    TensorMap<const float> src(ws.buffer(a.input).data(), shape);
    TensorMap<float> dst(ws.buffer(a.output).data(), out_shape);

    switch (l.kind) {
      case LayerKind::standard_conv:
        conv2d_into<float>(src, layer.weights, l.stride, l.pad, dst, ws.scratch(), threads);
        break;
      case LayerKind::pointwise_conv:
        pointwise_conv2d_into<float>(src, layer.weights, dst);
        break;
      case LayerKind::depthwise_conv:
        depthwise_conv2d_into<float>(src, layer.weights, l.stride, l.pad, dst, threads);
        break;
      case LayerKind::relu:
        relu_into<float>(src, dst);
        break;
      case LayerKind::global_avg_pool:
        global_avg_pool_into<float>(src, dst);
        break;
      case LayerKind::fully_connected:
        fully_connected_into<float>(src, layer.weights, dst);
        break;
      case LayerKind::softmax:
        softmax_into<float>(src, dst);
        break;
      case LayerKind::batch_norm:
        throw std::logic_error("batch_norm survived compilation");
    }
    shape = out_shape;
  }

  const int last = layer_count == 0 ? 0 : plan_.assignment[layer_count - 1].output;
  const auto result = ws.buffer(last).first(static_cast<std::size_t>(shape.size()));
  return Tensorf(shape, std::vector<float>(result.begin(), result.end()));
}

}  // namespace fdnet
