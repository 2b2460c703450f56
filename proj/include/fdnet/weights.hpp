// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_WEIGHTS_HPP
#define FDNET_WEIGHTS_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "fdnet/arch.hpp"
#include "fdnet/ops.hpp"

namespace fdnet {

/// A weight blob for one parameterized layer, keyed by its index in the
/// architecture's layer list.
///
/// Blob layouts:
///   standard / pointwise conv   (c_out, c_in, k, k)
///   depthwise conv              (c, 1, k, k)
///   batch norm                  (4, c): rows gamma, beta, running mean, running var
///   fully connected             (c_out, c_in + 1): each row is weights then bias
struct WeightEntry {
  std::uint32_t layer = 0;
  LayerKind kind = LayerKind::standard_conv;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

class WeightError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class WeightStore {
 public:
  void add(WeightEntry entry);

  const std::vector<WeightEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const WeightEntry* find(std::uint32_t layer) const;
  WeightEntry* find(std::uint32_t layer);

  ConvWeights<float> conv_weights(std::uint32_t layer) const;
  ConvWeights<float> fc_weights(std::uint32_t layer) const;
  BnParams<float> bn_params(std::uint32_t layer) const;

  friend bool operator==(const WeightStore&, const WeightStore&) = default;

 private:
  const WeightEntry& get(std::uint32_t layer, LayerKind kind) const;

  std::vector<WeightEntry> entries_;  // sorted by layer
};

/// Blob dims a layer must carry; empty for parameter-free layers.
std::vector<std::uint32_t> expected_dims(const LayerSpec& layer);

/// Throws WeightError naming the first layer whose entry is missing, has the
/// wrong kind or shape, or has no counterpart in the architecture.
void check_store(const ArchitectureSpec& spec, const WeightStore& store);

/// Glorot-uniform convolution and FC weights, zero FC bias, identity batch
/// norm. Fully determined by the seed.
WeightStore init_random_weights(const ArchitectureSpec& spec, std::uint64_t seed);

// FDW1 layout: "FDW1", u32 entry count, then per entry: u32 layer, u8 kind,
// u32 ndim, ndim x u32 dims, prod(dims) f32. Little-endian throughout.
std::vector<std::uint8_t> write_weights_bytes(const WeightStore& store);
WeightStore read_weights_bytes(std::span<const std::uint8_t> bytes);

void write_weights_file(const std::filesystem::path& path, const WeightStore& store);
WeightStore read_weights_file(const std::filesystem::path& path);

}  // namespace fdnet

#endif  // FDNET_WEIGHTS_HPP
