// SPDX-License-Identifier: Apache-2.0
#include "fdnet/weights.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fdnet/detail/binary.hpp"
#include "fdnet/tensor_io.hpp"

namespace fdnet {

namespace {

std::uint32_t u32(Index v) { return static_cast<std::uint32_t>(v); }

std::uint64_t element_count(const std::vector<std::uint32_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string dims_string(const std::vector<std::uint32_t>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? ", " : "") + std::to_string(dims[i]);
  return s + ")";
}

std::string layer_label(std::uint32_t layer, LayerKind kind) {
  return "layer " + std::to_string(layer) + " (" + std::string(to_string(kind)) + ")";
}

// Uniform in [-1, 1) from the top 24 bits, identical on every platform.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  float next() {
    const auto bits = static_cast<std::uint32_t>(engine_() >> 40);
    return static_cast<float>(bits) * (2.0f / 16777216.0f) - 1.0f;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

void WeightStore::add(WeightEntry entry) {
  if (element_count(entry.dims) != entry.data.size())
    throw WeightError(layer_label(entry.layer, entry.kind) + ": blob holds " +
                      std::to_string(entry.data.size()) + " values but dims are " +
                      dims_string(entry.dims));
  auto at = std::lower_bound(entries_.begin(), entries_.end(), entry.layer,
                             [](const WeightEntry& e, std::uint32_t l) { return e.layer < l; });
  if (at != entries_.end() && at->layer == entry.layer)
    throw WeightError("duplicate weight entry for layer " + std::to_string(entry.layer));
  entries_.insert(at, std::move(entry));
}

const WeightEntry* WeightStore::find(std::uint32_t layer) const {
  auto at = std::lower_bound(entries_.begin(), entries_.end(), layer,
                             [](const WeightEntry& e, std::uint32_t l) { return e.layer < l; });
  return at != entries_.end() && at->layer == layer ? &*at : nullptr;
}

WeightEntry* WeightStore::find(std::uint32_t layer) {
  return const_cast<WeightEntry*>(std::as_const(*this).find(layer));
}

const WeightEntry& WeightStore::get(std::uint32_t layer, LayerKind kind) const {
  const WeightEntry* e = find(layer);
  if (!e) throw WeightError("no weights for " + layer_label(layer, kind));
  if (e->kind != kind)
    throw WeightError(layer_label(layer, kind) + ": stored entry is " +
                      std::string(to_string(e->kind)));
  return *e;
}

ConvWeights<float> WeightStore::conv_weights(std::uint32_t layer) const {
  const WeightEntry* e = find(layer);
  if (!e || !is_conv(e->kind))
    throw WeightError("no convolution weights for layer " + std::to_string(layer));
  if (e->dims.size() != 4) throw WeightError(layer_label(layer, e->kind) + ": expected 4 dims");
  const Shape s{e->dims[0], e->dims[1], e->dims[2], e->dims[3]};
  return {Tensorf(s, e->data), {}};
}

ConvWeights<float> WeightStore::fc_weights(std::uint32_t layer) const {
  const WeightEntry& e = get(layer, LayerKind::fully_connected);
  if (e.dims.size() != 2 || e.dims[1] < 2)
    throw WeightError(layer_label(layer, e.kind) + ": expected dims (c_out, c_in + 1)");
  const Index outs = e.dims[0];
  const Index ins = Index(e.dims[1]) - 1;
  ConvWeights<float> w{Tensorf(Shape{outs, ins, 1, 1}), std::vector<float>(std::size_t(outs))};
  for (Index o = 0; o < outs; ++o) {
    const float* row = e.data.data() + o * (ins + 1);
    std::copy(row, row + ins, w.kernel.data() + o * ins);
    w.bias[std::size_t(o)] = row[ins];
  }
  return w;
}

BnParams<float> WeightStore::bn_params(std::uint32_t layer) const {
  const WeightEntry& e = get(layer, LayerKind::batch_norm);
  if (e.dims.size() != 2 || e.dims[0] != 4)
    throw WeightError(layer_label(layer, e.kind) + ": expected dims (4, c)");
  const auto c = static_cast<std::ptrdiff_t>(e.dims[1]);
  auto row = [&](int r) {
    return std::vector<float>(e.data.begin() + r * c, e.data.begin() + (r + 1) * c);
  };
  return {row(0), row(1), row(2), row(3)};
}

std::vector<std::uint32_t> expected_dims(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::standard_conv:
    case LayerKind::pointwise_conv:
      return {u32(l.c_out), u32(l.c_in), u32(l.kernel), u32(l.kernel)};
    case LayerKind::depthwise_conv:
      return {u32(l.c_out), 1, u32(l.kernel), u32(l.kernel)};
    case LayerKind::batch_norm:
      return {4, u32(l.c_out)};
    case LayerKind::fully_connected:
      return {u32(l.c_out), u32(l.c_in + 1)};
    default:
      return {};
  }
}

void check_store(const ArchitectureSpec& spec, const WeightStore& store) {
  std::size_t expected = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (!has_parameters(l.kind)) {
      if (store.find(u32(Index(i))))
        throw WeightError("weights supplied for parameter-free " +
                          layer_label(u32(Index(i)), l.kind));
      continue;
    }
    ++expected;
    const auto ordinal = u32(Index(i));
    const WeightEntry* e = store.find(ordinal);
    if (!e) throw WeightError("missing weights for " + layer_label(ordinal, l.kind));
    if (e->kind != l.kind)
      throw WeightError(layer_label(ordinal, l.kind) + ": weight entry has kind " +
                        std::string(to_string(e->kind)));
    const auto want = expected_dims(l);
    if (e->dims != want)
      throw WeightError(layer_label(ordinal, l.kind) + ": weight shape " + dims_string(e->dims) +
                        " but the architecture implies " + dims_string(want));
  }
  if (store.size() != expected)
    throw WeightError("weight store has " + std::to_string(store.size()) +
                      " entries but the architecture has " + std::to_string(expected) +
                      " parameterized layers");
}

WeightStore init_random_weights(const ArchitectureSpec& spec, std::uint64_t seed) {
  require_valid(spec);
  UniformSource rng(seed);
  WeightStore store;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (!has_parameters(l.kind)) continue;
    WeightEntry e{u32(Index(i)), l.kind, expected_dims(l), {}};
    e.data.resize(element_count(e.dims));

    if (l.kind == LayerKind::batch_norm) {
      const auto c = static_cast<std::ptrdiff_t>(l.c_out);
      std::fill(e.data.begin(), e.data.begin() + c, 1.0f);          // gamma
      std::fill(e.data.begin() + 3 * c, e.data.end(), 1.0f);        // running var
    } else {
      const Index k2 = l.kernel * l.kernel;
      // Depthwise filters see one input and feed one output channel each.
      const Index fan_in = (l.kind == LayerKind::depthwise_conv ? 1 : l.c_in) * k2;
      const Index fan_out = (l.kind == LayerKind::depthwise_conv ? 1 : l.c_out) * k2;
      const float bound = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
      if (l.kind == LayerKind::fully_connected) {
        const Index row = l.c_in + 1;
        for (Index o = 0; o < l.c_out; ++o)
          for (Index j = 0; j < l.c_in; ++j) e.data[std::size_t(o * row + j)] = bound * rng.next();
      } else {
        for (float& v : e.data) v = bound * rng.next();
      }
    }
    store.add(std::move(e));
  }
  return store;
}

std::vector<std::uint8_t> write_weights_bytes(const WeightStore& store) {
  detail::ByteWriter out;
  out.magic("FDW1");
  out.u32(u32(Index(store.size())));
  for (const WeightEntry& e : store.entries()) {
    out.u32(e.layer);
    out.u8(static_cast<std::uint8_t>(e.kind));
    out.u32(u32(Index(e.dims.size())));
    for (auto d : e.dims) out.u32(d);
    out.f32s(e.data);
  }
  return out.take();
}

WeightStore read_weights_bytes(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "FDW1");
  in.expect_magic("FDW1");
  const std::uint32_t count = in.u32("entry count");
  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    WeightEntry e;
    e.layer = in.u32("layer ordinal");
    const std::uint8_t tag = in.u8("kind tag");
    if (tag > static_cast<std::uint8_t>(LayerKind::softmax))
      throw FormatError("FDW1: entry " + std::to_string(i) + " has unknown kind tag " +
                        std::to_string(tag));
    e.kind = static_cast<LayerKind>(tag);
    const std::uint32_t ndim = in.u32("ndim");
    if (ndim == 0 || ndim > 8)
      throw FormatError("FDW1: entry " + std::to_string(i) + " has ndim " + std::to_string(ndim));
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      e.dims.push_back(in.u32("dims"));
      n *= e.dims.back();
      if (n > in.remaining()) throw FormatError("FDW1: truncated blob for entry " + std::to_string(i));
    }
    e.data.resize(n);
    in.f32s(e.data, "blob");
    try {
      store.add(std::move(e));
    } catch (const WeightError& err) {
      throw FormatError(std::string("FDW1: ") + err.what());
    }
  }
  in.expect_end();
  return store;
}

void write_weights_file(const std::filesystem::path& path, const WeightStore& store) {
  write_file_bytes(path, write_weights_bytes(store));
}

WeightStore read_weights_file(const std::filesystem::path& path) {
  return read_weights_bytes(read_file_bytes(path));
}

}  // namespace fdnet
