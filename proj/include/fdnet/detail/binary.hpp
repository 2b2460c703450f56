// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_DETAIL_BINARY_HPP
#define FDNET_DETAIL_BINARY_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdnet/tensor_io.hpp"

// Little-endian byte packing shared by the tensor and weight containers.
namespace fdnet::detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
    const auto at = bytes_.size();
    bytes_.resize(at + 4);
    std::memcpy(bytes_.data() + at, &v, 4);
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void f32s(std::span<const float> fs) {
    bytes_.reserve(bytes_.size() + 4 * fs.size());
    for (float f : fs) f32(f);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::memcmp(bytes_.data() + pos_, m.data(), m.size()) != 0)
      throw FormatError(what_ + ": bad magic, expected \"" + std::string(m) + "\"");
    pos_ += m.size();
  }
  std::uint8_t u8(const char* field) {
    need(1, field);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
    return v;
  }
  void f32s(std::span<float> out, const char* field) {
    if (out.size() > remaining() / 4) throw FormatError(what_ + ": truncated " + field);
    for (float& f : out) f = std::bit_cast<float>(u32(field));
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void expect_end() const {
    if (remaining() != 0)
      throw FormatError(what_ + ": " + std::to_string(remaining()) + " trailing bytes");
  }

 private:
  void need(std::size_t n, const char* field) const {
    if (remaining() < n) throw FormatError(what_ + ": truncated " + field);
  }

  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace fdnet::detail

#endif  // FDNET_DETAIL_BINARY_HPP
