// SPDX-License-Identifier: Apache-2.0
#include "fdnet/reference_forward.hpp"

#include "fdnet/reference_ops.hpp"

namespace fdnet::reference {

Tensorf forward(const ArchitectureSpec& spec, const WeightStore& store, const Tensorf& input,
                std::optional<std::size_t> layer_count, std::uint64_t* macs) {
  require_valid(spec);
  check_store(spec, store);
  if (input.shape() != spec.input)
    throw ShapeError("reference input is " + to_string(input.shape()) + ", expected " +
                     to_string(spec.input));

  const std::size_t count = std::min(layer_count.value_or(spec.layers.size()), spec.layers.size());
  Tensorf x = input;
  for (std::size_t i = 0; i < count; ++i) {
    const LayerSpec& l = spec.layers[i];
    const auto ord = static_cast<std::uint32_t>(i);
    switch (l.kind) {
      case LayerKind::standard_conv:
      case LayerKind::pointwise_conv:
        x = reference::conv2d(x, store.conv_weights(ord), l.stride, l.pad, macs);
        break;
      case LayerKind::depthwise_conv:
        x = reference::depthwise_conv2d(x, store.conv_weights(ord), l.stride, l.pad, macs);
        break;
      case LayerKind::batch_norm:
        x = reference::batch_norm(x, store.bn_params(ord));
        break;
      case LayerKind::relu:
        x = reference::relu(x);
        break;
      case LayerKind::global_avg_pool:
        x = reference::global_avg_pool(x);
        break;
      case LayerKind::fully_connected:
        x = reference::fully_connected(x, store.fc_weights(ord), macs);
        break;
      case LayerKind::softmax:
        x = reference::softmax(x);
        break;
    }
  }
  return x;
}

Tensorf forward_logits(const ArchitectureSpec& spec, const WeightStore& store, const Tensorf& input) {
  std::size_t count = spec.layers.size();
  if (count > 0 && spec.layers.back().kind == LayerKind::softmax) --count;
  return forward(spec, store, input, count);
}

}  // namespace fdnet::reference
