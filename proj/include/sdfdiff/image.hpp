#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace sdfdiff {

/// Row-major grayscale image, row 0 at the top.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }
};

/// Grayscale PFM ("Pf"), little-endian float32, scanlines bottom-to-top.
void write_pfm(const std::filesystem::path& path, const Image& image);
Image read_pfm(const std::filesystem::path& path);

/// 8-bit grayscale PNG; values clamped to [0,1] then scaled to 255.
void write_png(const std::filesystem::path& path, const Image& image);

/// Area-weighted box filter to a smaller square/rectangular size.
Image box_downsample(const Image& image, int width, int height);

}  // namespace sdfdiff
