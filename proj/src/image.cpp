// SPDX-License-Identifier: Apache-2.0
#include "fdnet/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "fdnet/tensor_io.hpp"

namespace fdnet {

namespace {

class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Next whitespace-delimited decimal, skipping '#' comments.
  long number(const char* field) {
    skip_space_and_comments();
    long v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000) throw FormatError(std::string("PPM: ") + field + " is too large");
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("PPM: missing ") + field);
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw FormatError("PPM: header not terminated by whitespace");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;  // past the magic
};

void require_image(const Tensorf& image, const char* op) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3)
    throw ShapeError(std::string(op) + ": expected a 1x3xHxW image, got " + to_string(s));
}

}  // namespace

Tensorf decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw FormatError("PPM: bad magic, expected \"P6\"");
  PpmHeaderReader header(bytes);
  const long width = header.number("width");
  const long height = header.number("height");
  const long maxval = header.number("maxval");
  if (width < 1 || height < 1) throw FormatError("PPM: image has no pixels");
  if (maxval < 1 || maxval > 255) throw FormatError("PPM: only 8-bit maxval (1..255) is supported");
  const std::size_t offset = header.raster_offset();

  const auto plane = static_cast<std::size_t>(width * height);
  if (bytes.size() - offset < 3 * plane) throw FormatError("PPM: truncated raster");

  Tensorf image(Shape{1, 3, height, width});
  const float rescale = 255.0f / static_cast<float>(maxval);
  const std::uint8_t* px = bytes.data() + offset;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      image[Index(c * plane + i)] = static_cast<float>(px[3 * i + c]) * rescale;
  return image;
}

std::vector<std::uint8_t> encode_ppm(const Tensorf& image) {
  require_image(image, "encode_ppm");
  const Shape& s = image.shape();
  const std::string header =
      "P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto plane = static_cast<std::size_t>(s.plane());
  out.reserve(out.size() + 3 * plane);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const float v = std::clamp(image[Index(c * plane + i)], 0.0f, 255.0f);
      out.push_back(static_cast<std::uint8_t>(std::lround(v)));
    }
  return out;
}

Tensorf load_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "FDT1"))
    return read_tensor_bytes(bytes);
  throw FormatError(path.string() + ": neither a P6 PPM nor an FDT1 tensor");
}

std::pair<Index, Index> resized_extent(Index h, Index w, Index short_side) {
  if (h < 1 || w < 1) throw ShapeError("image must be at least 1x1");
  if (short_side < 1) throw std::invalid_argument("resize target must be >= 1");
  auto scaled_long = [short_side](Index longer, Index shorter) {
    return static_cast<Index>(
        std::llround(static_cast<double>(longer) * static_cast<double>(short_side) / static_cast<double>(shorter)));
  };
  if (h <= w) return {short_side, scaled_long(w, h)};
  return {scaled_long(h, w), short_side};
}

Tensorf resize_bilinear(const Tensorf& image, Index out_h, Index out_w) {
  const Shape& s = image.shape();
  Tensorf out(Shape{s.n, s.c, out_h, out_w});

  struct Tap {
    Index lo, hi;
    float frac;
  };
  auto taps = [](Index in, Index out_extent) {
    std::vector<Tap> t(static_cast<std::size_t>(out_extent));
    const double scale = static_cast<double>(in) / static_cast<double>(out_extent);
    for (Index i = 0; i < out_extent; ++i) {
      const double src = std::max(0.0, (static_cast<double>(i) + 0.5) * scale - 0.5);
      const auto lo = std::min(static_cast<Index>(src), in - 1);
      t[std::size_t(i)] = {lo, std::min(lo + 1, in - 1), static_cast<float>(src - static_cast<double>(lo))};
    }
    return t;
  };
  const auto ys = taps(s.h, out_h);
  const auto xs = taps(s.w, out_w);

  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c)
      for (Index y = 0; y < out_h; ++y) {
        const Tap& ty = ys[std::size_t(y)];
        for (Index x = 0; x < out_w; ++x) {
          const Tap& tx = xs[std::size_t(x)];
          const float top = image(n, c, ty.lo, tx.lo) +
                            tx.frac * (image(n, c, ty.lo, tx.hi) - image(n, c, ty.lo, tx.lo));
          const float bottom = image(n, c, ty.hi, tx.lo) +
                               tx.frac * (image(n, c, ty.hi, tx.hi) - image(n, c, ty.hi, tx.lo));
          out(n, c, y, x) = top + ty.frac * (bottom - top);
        }
      }
  return out;
}

Tensorf center_crop(const Tensorf& image, Index size) {
  const Shape& s = image.shape();
  if (size < 1 || size > s.h || size > s.w)
    throw ShapeError("cannot crop " + std::to_string(size) + "x" + std::to_string(size) +
                     " from " + to_string(s));
  const Index top = (s.h - size) / 2;
  const Index left = (s.w - size) / 2;
  Tensorf out(Shape{s.n, s.c, size, size});
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c)
      for (Index y = 0; y < size; ++y)
        std::copy_n(&image(n, c, top + y, left), size, &out(n, c, y, 0));
  return out;
}

Tensorf preprocess(const Tensorf& image, const PreprocessOptions& options) {
  require_image(image, "preprocess");
  if (options.crop < 1 || options.crop > options.short_side)
    throw std::invalid_argument("preprocess: crop must be between 1 and the resized short side");
  const auto [h, w] = resized_extent(image.shape().h, image.shape().w, options.short_side);
  const Tensorf resized = (h == image.shape().h && w == image.shape().w)
                              ? image
                              : resize_bilinear(image, h, w);
  Tensorf out = center_crop(resized, options.crop);
  const Index plane = out.shape().plane();
  for (Index c = 0; c < 3; ++c) {
    const float mean = options.mean[std::size_t(c)];
    const float inv_std = 1.0f / options.stddev[std::size_t(c)];
    float* p = out.data() + c * plane;
    for (Index i = 0; i < plane; ++i) p[i] = (p[i] * options.value_scale - mean) * inv_std;
  }
  return out;
}

}  // namespace fdnet
