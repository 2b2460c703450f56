// SPDX-License-Identifier: Apache-2.0
#include "fdnet/arch.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "json.hpp"

namespace fdnet {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 8> kKindNames{{
    {LayerKind::standard_conv, "standard_conv"},
    {LayerKind::depthwise_conv, "depthwise_conv"},
    {LayerKind::pointwise_conv, "pointwise_conv"},
    {LayerKind::batch_norm, "batch_norm"},
    {LayerKind::relu, "relu"},
    {LayerKind::global_avg_pool, "global_avg_pool"},
    {LayerKind::fully_connected, "fully_connected"},
    {LayerKind::softmax, "softmax"},
}};

// conv -> BN -> ReLU, the unit every convolution is wrapped in.
void append_conv_unit(std::vector<LayerSpec>& layers, const LayerSpec& conv) {
  layers.push_back(conv);
  layers.push_back(batch_norm_layer(conv.c_out));
  layers.push_back(relu_layer(conv.c_out));
}

// Depthwise-separable block: 3x3 depthwise (carrying the stride) then 1x1.
void append_separable(std::vector<LayerSpec>& layers, Index c_in, Index c_out, Index stride) {
  append_conv_unit(layers, depthwise_conv(c_in, 3, stride));
  append_conv_unit(layers, pointwise_conv(c_in, c_out));
}

void append_head(std::vector<LayerSpec>& layers, Index channels) {
  layers.push_back(global_avg_pool_layer(channels));
  layers.push_back(fully_connected_layer(channels, kNumClasses));
  layers.push_back(softmax_layer(kNumClasses));
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("width multiplier must be a positive finite number");
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  return std::nullopt;
}

Index scale_channels(Index base, double alpha) {
  if (base < 1) throw std::invalid_argument("scale_channels: base channel count must be >= 1");
  check_alpha(alpha);
  const auto scaled = static_cast<Index>(std::llround(static_cast<double>(base) * alpha));
  return std::max<Index>(scaled, 1);
}

LayerSpec standard_conv(Index c_in, Index c_out, Index kernel, Index stride) {
  return {LayerKind::standard_conv, c_in, c_out, kernel, stride, kernel / 2};
}
LayerSpec depthwise_conv(Index channels, Index kernel, Index stride) {
  return {LayerKind::depthwise_conv, channels, channels, kernel, stride, kernel / 2};
}
LayerSpec pointwise_conv(Index c_in, Index c_out) {
  return {LayerKind::pointwise_conv, c_in, c_out, 1, 1, 0};
}
LayerSpec batch_norm_layer(Index channels) { return {LayerKind::batch_norm, channels, channels}; }
LayerSpec relu_layer(Index channels) { return {LayerKind::relu, channels, channels}; }
LayerSpec global_avg_pool_layer(Index channels) {
  return {LayerKind::global_avg_pool, channels, channels};
}
LayerSpec fully_connected_layer(Index c_in, Index c_out) {
  return {LayerKind::fully_connected, c_in, c_out};
}
LayerSpec softmax_layer(Index channels) { return {LayerKind::softmax, channels, channels}; }

ArchitectureSpec build_fd_mobilenet(double alpha) {
  check_alpha(alpha);
  auto ch = [alpha](Index base) { return scale_channels(base, alpha); };

  ArchitectureSpec spec{"fd-mobilenet", alpha, Shape{1, 3, 224, 224}, {}};
  auto& l = spec.layers;
  append_conv_unit(l, standard_conv(3, ch(32), 3, 2));  // 112x112
  append_separable(l, ch(32), ch(64), 2);               // 56x56
  append_separable(l, ch(64), ch(128), 2);              // 28x28
  append_separable(l, ch(128), ch(128), 1);
  append_separable(l, ch(128), ch(256), 2);             // 14x14
  append_separable(l, ch(256), ch(256), 1);
  append_separable(l, ch(256), ch(512), 2);             // 7x7
  for (int i = 0; i < 4; ++i) append_separable(l, ch(512), ch(512), 1);
  append_separable(l, ch(512), ch(1024), 1);
  append_head(l, ch(1024));
  return spec;
}

ArchitectureSpec build_mobilenet(double alpha) {
  check_alpha(alpha);
  auto ch = [alpha](Index base) { return scale_channels(base, alpha); };

  ArchitectureSpec spec{"mobilenet", alpha, Shape{1, 3, 224, 224}, {}};
  auto& l = spec.layers;
  append_conv_unit(l, standard_conv(3, ch(32), 3, 2));  // 112x112
  append_separable(l, ch(32), ch(64), 1);
  append_separable(l, ch(64), ch(128), 2);              // 56x56
  append_separable(l, ch(128), ch(128), 1);
  append_separable(l, ch(128), ch(256), 2);             // 28x28
  append_separable(l, ch(256), ch(256), 1);
  append_separable(l, ch(256), ch(512), 2);             // 14x14
  for (int i = 0; i < 5; ++i) append_separable(l, ch(512), ch(512), 1);
  append_separable(l, ch(512), ch(1024), 2);            // 7x7
  append_separable(l, ch(1024), ch(1024), 1);
  append_head(l, ch(1024));
  return spec;
}

ArchitectureSpec build_model(std::string_view model, double alpha) {
  if (model == "fd-mobilenet") return build_fd_mobilenet(alpha);
  if (model == "mobilenet") return build_mobilenet(alpha);
  throw std::invalid_argument("unknown model '" + std::string(model) +
                              "' (expected fd-mobilenet or mobilenet)");
}

std::string ValidationResult::summary() const {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += "; ";
    if (d.layer) out += "layer " + std::to_string(*d.layer) + ": ";
    out += d.message;
  }
  return out;
}

Shape layer_output_shape(const LayerSpec& layer, const Shape& in) {
  if (in.c != layer.c_in)
    throw ShapeError(std::string(to_string(layer.kind)) + " expects " +
                     std::to_string(layer.c_in) + " input channels, got " + std::to_string(in.c));
  switch (layer.kind) {
    case LayerKind::standard_conv:
    case LayerKind::depthwise_conv:
    case LayerKind::pointwise_conv:
      return {in.n, layer.c_out, conv_output_dim(in.h, layer.kernel, layer.stride, layer.pad),
              conv_output_dim(in.w, layer.kernel, layer.stride, layer.pad)};
    case LayerKind::global_avg_pool:
      return {in.n, in.c, 1, 1};
    case LayerKind::fully_connected:
      if (in.h != 1 || in.w != 1)
        throw ShapeError("fully_connected needs a 1x1 input, got " + to_string(in));
      return {in.n, layer.c_out, 1, 1};
    case LayerKind::batch_norm:
    case LayerKind::relu:
    case LayerKind::softmax:
      return in;
  }
  throw ShapeError("unknown layer kind");
}

ValidationResult validate(const ArchitectureSpec& spec) {
  ValidationResult r;
  auto fail = [&r](std::optional<std::size_t> at, std::string msg) {
    r.diagnostics.push_back({at, std::move(msg)});
  };

  if (!spec.input.valid()) fail(std::nullopt, "input shape " + to_string(spec.input) + " is invalid");
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha)) fail(std::nullopt, "alpha must be positive");
  if (spec.layers.empty()) fail(std::nullopt, "architecture has no layers");
  if (!r.ok()) return r;

  std::optional<std::size_t> fc_at;
  Shape shape = spec.input;
  bool shape_known = true;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string kind(to_string(l.kind));
    if (l.c_in < 1 || l.c_out < 1) fail(i, kind + " has non-positive channel count");
    if (l.stride != 1 && l.stride != 2) fail(i, kind + " stride must be 1 or 2");
    if (l.kernel < 1 || l.kernel % 2 == 0) fail(i, kind + " kernel must be odd and >= 1");
    if (l.pad < 0) fail(i, kind + " padding must be non-negative");
    if (l.kind == LayerKind::depthwise_conv && l.c_in != l.c_out)
      fail(i, "depthwise_conv must keep its channel count");
    if (l.kind == LayerKind::pointwise_conv && (l.kernel != 1 || l.stride != 1 || l.pad != 0))
      fail(i, "pointwise_conv must be 1x1, stride 1, no padding");
    if (!is_conv(l.kind) && l.kind != LayerKind::fully_connected && l.c_in != l.c_out)
      fail(i, kind + " cannot change the channel count");
    if (!is_conv(l.kind) && (l.kernel != 1 || l.stride != 1 || l.pad != 0))
      fail(i, kind + " takes no kernel, stride or padding");

    if (l.kind == LayerKind::fully_connected) {
      if (fc_at) fail(i, "more than one fully_connected layer");
      fc_at = i;
    } else if (fc_at && l.kind != LayerKind::softmax) {
      fail(i, kind + " follows the fully_connected layer; only softmax may");
    }

    if (shape_known) {
      if (l.c_in != shape.c) {
        fail(i, kind + " expects " + std::to_string(l.c_in) + " input channels but receives " +
                    std::to_string(shape.c));
        shape_known = false;
      } else {
        try {
          shape = layer_output_shape(l, shape);
        } catch (const std::exception& e) {
          fail(i, std::string("spatial underflow: ") + e.what());
          shape_known = false;
        }
      }
    }
  }
  if (!fc_at) fail(std::nullopt, "architecture has no fully_connected layer");
  return r;
}

void require_valid(const ArchitectureSpec& spec) {
  const ValidationResult r = validate(spec);
  if (!r.ok()) throw ArchitectureError("invalid architecture '" + spec.name + "': " + r.summary());
}

std::vector<Shape> layer_output_shapes(const ArchitectureSpec& spec) {
  std::vector<Shape> shapes;
  shapes.reserve(spec.layers.size());
  Shape s = spec.input;
  for (const LayerSpec& l : spec.layers) {
    s = layer_output_shape(l, s);
    shapes.push_back(s);
  }
  return shapes;
}

std::size_t count_weighted_layers(const ArchitectureSpec& spec) {
  std::size_t n = 0;
  for (const LayerSpec& l : spec.layers) n += is_weighted(l.kind) ? 1 : 0;
  return n;
}

std::string export_json(const ArchitectureSpec& spec) {
  nlohmann::ordered_json j;
  j["name"] = spec.name;
  j["alpha"] = spec.alpha;
  j["input"] = {spec.input.n, spec.input.c, spec.input.h, spec.input.w};
  auto& layers = j["layers"] = nlohmann::ordered_json::array();
  for (const LayerSpec& l : spec.layers) {
    layers.push_back({{"kind", to_string(l.kind)},
                      {"c_in", l.c_in},
                      {"c_out", l.c_out},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"pad", l.pad}});
  }
  return j.dump(2) + "\n";
}

ArchitectureSpec import_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArchitectureError(std::string("architecture JSON does not parse: ") + e.what());
  }
  try {
    ArchitectureSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.alpha = j.at("alpha").get<double>();
    const auto dims = j.at("input").get<std::vector<Index>>();
    if (dims.size() != 4) throw ArchitectureError("\"input\" must list 4 dims [n, c, h, w]");
    spec.input = {dims[0], dims[1], dims[2], dims[3]};
    const auto& layers = j.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      const auto name = l.at("kind").get<std::string>();
      const auto kind = parse_layer_kind(name);
      if (!kind) throw ArchitectureError("layer " + std::to_string(i) + ": unknown kind '" + name + "'");
      spec.layers.push_back({*kind, l.at("c_in").get<Index>(), l.at("c_out").get<Index>(),
                             l.at("kernel").get<Index>(), l.at("stride").get<Index>(),
                             l.at("pad").get<Index>()});
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ArchitectureError(std::string("architecture JSON is malformed: ") + e.what());
  }
}

}  // namespace fdnet
