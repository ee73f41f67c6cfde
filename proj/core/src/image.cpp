#include "hsi/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "hsi/error.hpp"

namespace hsi {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return f;
}

struct DecodedPng {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // row-major, big-endian for 16-bit

  std::uint32_t sample(int u, int v, int c) const {
    const std::size_t idx = (static_cast<std::size_t>(v) * width + u) * channels + c;
    if (bit_depth == 16) return (std::uint32_t(bytes[2 * idx]) << 8) | bytes[2 * idx + 1];
    return bytes[idx];
  }
};

DecodedPng decode(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw Error(ErrorKind::Input, "not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Input, "corrupt PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  DecodedPng out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.bytes.resize(rowbytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int v = 0; v < out.height; ++v) rows[v] = out.bytes.data() + v * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type,
            int bit_depth, const std::vector<std::uint8_t>& bytes) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "failed writing PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = bytes.size() / height;
  for (int v = 0; v < height; ++v)
    png_write_row(png, const_cast<png_bytep>(bytes.data() + v * rowbytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void validate_depth(const DepthImage& depth) {
  if (depth.width <= 0 || depth.height <= 0 ||
      depth.data.size() != static_cast<std::size_t>(depth.width) * depth.height)
    throw Error(ErrorKind::Input, "depth image has inconsistent dimensions");
  for (double d : depth.data) {
    if (!std::isfinite(d)) throw Error(ErrorKind::Input, "depth image contains non-finite values");
    if (d < 0.0) throw Error(ErrorKind::Input, "depth image contains negative values");
  }
}

DepthImage read_depth_png(const std::filesystem::path& path) {
  DecodedPng png = decode(path);
  if (png.channels != 1 || png.bit_depth != 16)
    throw Error(ErrorKind::Input, "depth PNG must be 16-bit grayscale: " + path.string());
  DepthImage depth(png.width, png.height);
  for (int v = 0; v < png.height; ++v)
    for (int u = 0; u < png.width; ++u) depth.at(u, v) = png.sample(u, v, 0) / 1000.0;
  return depth;
}

void write_depth_png(const std::filesystem::path& path, const DepthImage& depth) {
  validate_depth(depth);
  std::vector<std::uint8_t> bytes(depth.data.size() * 2);
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    const double mm = std::round(depth.data[i] * 1000.0);
    if (mm > 65535.0) throw Error(ErrorKind::Input, "depth exceeds 65.535 m PNG range");
    const auto q = static_cast<std::uint16_t>(mm);
    bytes[2 * i] = static_cast<std::uint8_t>(q >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
  }
  encode(path, depth.width, depth.height, PNG_COLOR_TYPE_GRAY, 16, bytes);
}

Mask read_mask_png(const std::filesystem::path& path) {
  DecodedPng png = decode(path);
  Mask mask(png.width, png.height);
  for (int v = 0; v < png.height; ++v)
    for (int u = 0; u < png.width; ++u) {
      bool on = false;
      for (int c = 0; c < png.channels; ++c) on = on || png.sample(u, v, c) != 0;
      mask.at(u, v) = on ? 1 : 0;
    }
  return mask;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> bytes(mask.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
  encode(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 8, bytes);
}

RgbImage read_rgb_png(const std::filesystem::path& path) {
  DecodedPng png = decode(path);
  RgbImage rgb(png.width, png.height);
  const int shift = png.bit_depth == 16 ? 8 : 0;
  for (int v = 0; v < png.height; ++v)
    for (int u = 0; u < png.width; ++u) {
      if (png.channels >= 3) {
        rgb.at(u, v) = {static_cast<std::uint8_t>(png.sample(u, v, 0) >> shift),
                        static_cast<std::uint8_t>(png.sample(u, v, 1) >> shift),
                        static_cast<std::uint8_t>(png.sample(u, v, 2) >> shift)};
      } else {
        const auto g = static_cast<std::uint8_t>(png.sample(u, v, 0) >> shift);
        rgb.at(u, v) = {g, g, g};
      }
    }
  return rgb;
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& rgb) {
  std::vector<std::uint8_t> bytes(rgb.data.size() * 3);
  for (std::size_t i = 0; i < rgb.data.size(); ++i) {
    bytes[3 * i] = rgb.data[i].r;
    bytes[3 * i + 1] = rgb.data[i].g;
    bytes[3 * i + 2] = rgb.data[i].b;
  }
  encode(path, rgb.width, rgb.height, PNG_COLOR_TYPE_RGB, 8, bytes);
}

}  // namespace hsi
