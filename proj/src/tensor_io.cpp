// SPDX-License-Identifier: Apache-2.0
#include "fdnet/tensor_io.hpp"

#include <fstream>
#include <iterator>
#include <limits>

#include "fdnet/detail/binary.hpp"

namespace fdnet {

std::vector<std::uint8_t> write_tensor_bytes(const Tensorf& t) {
  const Shape& s = t.shape();
  detail::ByteWriter out;
  out.magic("FDT1");
  out.u32(4);
  for (Index d : {s.n, s.c, s.h, s.w}) {
    if (d > std::numeric_limits<std::uint32_t>::max())
      throw FormatError("FDT1: dimension " + std::to_string(d) + " exceeds u32");
    out.u32(static_cast<std::uint32_t>(d));
  }
  out.f32s(t.span());
  return out.take();
}

Tensorf read_tensor_bytes(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "FDT1");
  in.expect_magic("FDT1");
  const std::uint32_t ndim = in.u32("ndim");
  if (ndim != 4) throw FormatError("FDT1: ndim must be 4, got " + std::to_string(ndim));

  Index dims[4];
  std::uint64_t count = 1;
  for (Index& d : dims) {
    const std::uint32_t v = in.u32("dims");
    if (v == 0) throw FormatError("FDT1: zero-sized dimension");
    // Reject products that cannot be addressed rather than wrapping.
    if (count > (std::uint64_t{1} << 40) / v) throw FormatError("FDT1: dimension product overflows");
    count *= v;
    d = static_cast<Index>(v);
  }
  if (count > in.remaining() / 4) throw FormatError("FDT1: truncated payload");

  Tensorf t(Shape{dims[0], dims[1], dims[2], dims[3]});
  in.f32s(t.span(), "payload");
  in.expect_end();
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

void write_tensor_file(const std::filesystem::path& path, const Tensorf& t) {
  write_file_bytes(path, write_tensor_bytes(t));
}

Tensorf read_tensor_file(const std::filesystem::path& path) {
  return read_tensor_bytes(read_file_bytes(path));
}

}  // namespace fdnet
