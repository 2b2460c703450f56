// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_IMAGE_HPP
#define FDNET_IMAGE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "fdnet/tensor.hpp"

namespace fdnet {

/// Binary PPM (P6) to a 1 x 3 x H x W tensor holding 0..255 sample values.
/// Maxvals below 255 are rescaled to that range.
Tensorf decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Tensorf& image);

/// Reads a P6 PPM or an FDT1 tensor, chosen by the file's magic bytes.
Tensorf load_image(const std::filesystem::path& path);

struct PreprocessOptions {
  Index short_side = 256;
  Index crop = 224;
  float value_scale = 1.0f / 255.0f;  // applied before mean/std
  std::array<float, 3> mean{0.0f, 0.0f, 0.0f};
  std::array<float, 3> stddev{1.0f, 1.0f, 1.0f};
};

/// Size after scaling the shorter edge to `short_side`, keeping aspect ratio;
/// the longer edge is rounded to the nearest pixel. Returns (h, w).
std::pair<Index, Index> resized_extent(Index h, Index w, Index short_side);

/// Bilinear resampling with half-pixel centers and edge clamping.
Tensorf resize_bilinear(const Tensorf& image, Index out_h, Index out_w);

/// Central size x size window; odd margins put the extra pixel after the crop.
Tensorf center_crop(const Tensorf& image, Index size);

/// Evaluation preprocessing: shorter edge to short_side, center crop, then
/// (v * value_scale - mean[c]) / stddev[c].
Tensorf preprocess(const Tensorf& image, const PreprocessOptions& options = {});

}  // namespace fdnet

#endif  // FDNET_IMAGE_HPP
