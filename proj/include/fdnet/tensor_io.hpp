// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_TENSOR_IO_HPP
#define FDNET_TENSOR_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "fdnet/tensor.hpp"

namespace fdnet {

/// Malformed or truncated binary container.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// FDT1 layout: "FDT1", u32 ndim (= 4), u32 n, c, h, w, then n*c*h*w f32.
// All integers and floats little-endian.
inline constexpr std::size_t kTensorHeaderBytes = 24;

std::vector<std::uint8_t> write_tensor_bytes(const Tensorf& t);
Tensorf read_tensor_bytes(std::span<const std::uint8_t> bytes);

void write_tensor_file(const std::filesystem::path& path, const Tensorf& t);
Tensorf read_tensor_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace fdnet

#endif  // FDNET_TENSOR_IO_HPP
