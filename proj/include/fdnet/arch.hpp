// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_ARCH_HPP
#define FDNET_ARCH_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fdnet/tensor.hpp"

namespace fdnet {

/// Layer kinds. The numeric values double as the kind tag in weight files.
enum class LayerKind : std::uint8_t {
  standard_conv = 0,
  depthwise_conv = 1,
  pointwise_conv = 2,
  batch_norm = 3,
  relu = 4,
  global_avg_pool = 5,
  fully_connected = 6,
  softmax = 7,
};

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

/// Convolutions and the fully connected layer; these are the "layers" when
/// counting network depth.
constexpr bool is_weighted(LayerKind k) {
  return k == LayerKind::standard_conv || k == LayerKind::depthwise_conv ||
         k == LayerKind::pointwise_conv || k == LayerKind::fully_connected;
}

constexpr bool is_conv(LayerKind k) {
  return k == LayerKind::standard_conv || k == LayerKind::depthwise_conv ||
         k == LayerKind::pointwise_conv;
}

/// Layers that own a weight-store entry.
constexpr bool has_parameters(LayerKind k) { return is_weighted(k) || k == LayerKind::batch_norm; }

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  Index c_in = 1;
  Index c_out = 1;
  Index kernel = 1;
  Index stride = 1;
  Index pad = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// An ordered single-path network description.
struct ArchitectureSpec {
  std::string name;
  double alpha = 1.0;  // width multiplier
  Shape input{1, 3, 224, 224};
  std::vector<LayerSpec> layers;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

/// Rounds base * alpha to the nearest integer (halves away from zero), min 1.
Index scale_channels(Index base, double alpha);

/// k x k standard convolution with "same"-style padding k / 2.
LayerSpec standard_conv(Index c_in, Index c_out, Index kernel, Index stride);
LayerSpec depthwise_conv(Index channels, Index kernel, Index stride);
LayerSpec pointwise_conv(Index c_in, Index c_out);
LayerSpec batch_norm_layer(Index channels);
LayerSpec relu_layer(Index channels);
LayerSpec global_avg_pool_layer(Index channels);
LayerSpec fully_connected_layer(Index c_in, Index c_out);
LayerSpec softmax_layer(Index channels);

inline constexpr Index kNumClasses = 1000;

/// Fast-downsampling MobileNet: 32x downsampling within the first 12 weighted
/// layers, then six depthwise-separable blocks at 7x7.
ArchitectureSpec build_fd_mobilenet(double alpha);

/// The 28-layer MobileNet-224 baseline with its slower downsampling schedule.
ArchitectureSpec build_mobilenet(double alpha);

/// Builds either network by its CLI name ("fd-mobilenet" or "mobilenet").
ArchitectureSpec build_model(std::string_view model, double alpha);

struct Diagnostic {
  std::optional<std::size_t> layer;  // offending layer index, if any
  std::string message;
};

struct ValidationResult {
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
  std::string summary() const;
};

class ArchitectureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ValidationResult validate(const ArchitectureSpec& spec);

/// Throws ArchitectureError carrying every diagnostic if the architecture is invalid.
void require_valid(const ArchitectureSpec& spec);

/// Output shape after each layer. The architecture must validate.
std::vector<Shape> layer_output_shapes(const ArchitectureSpec& spec);

/// Shape a single layer produces from `in`; throws ShapeError on mismatch.
Shape layer_output_shape(const LayerSpec& layer, const Shape& in);

std::size_t count_weighted_layers(const ArchitectureSpec& spec);

std::string export_json(const ArchitectureSpec& spec);
ArchitectureSpec import_json(std::string_view text);

}  // namespace fdnet

#endif  // FDNET_ARCH_HPP
