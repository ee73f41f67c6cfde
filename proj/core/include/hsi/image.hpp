#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hsi {

/// Row-major single-channel (or packed multi-channel) raster.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  const T& at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Depth in meters; 0 marks an invalid pixel.
using DepthImage = Image<double>;
using Mask = Image<std::uint8_t>;
using RgbImage = Image<Rgb>;

/// Throws Input if any value is negative or non-finite.
void validate_depth(const DepthImage& depth);

/// 16-bit grayscale PNG, millimeters -> meters.
DepthImage read_depth_png(const std::filesystem::path& path);
/// Meters -> 16-bit millimeters, rounded to nearest.
void write_depth_png(const std::filesystem::path& path, const DepthImage& depth);

/// Any nonzero gray/alpha-stripped value counts as true.
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

RgbImage read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const RgbImage& rgb);

}  // namespace hsi
