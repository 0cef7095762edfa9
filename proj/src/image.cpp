#include "sdfdiff/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "sdfdiff/errors.hpp"

namespace sdfdiff {

void write_pfm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "Pf\n" << image.width << ' ' << image.height << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(image.width));
  for (int y = image.height - 1; y >= 0; --y) {
    for (int x = 0; x < image.width; ++x) row[x] = static_cast<float>(image.at(x, y));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  std::string tag;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> tag >> w >> h >> scale;
  if (!in || tag != "Pf" || w <= 0 || h <= 0) throw IoError(path.string() + ": not a grayscale PFM");
  in.get();  // single whitespace before the raster
  if (scale > 0.0) throw IoError(path.string() + ": big-endian PFM not supported");
  Image img(w, h);
  std::vector<float> row(static_cast<std::size_t>(w));
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw IoError(path.string() + ": truncated PFM raster");
    for (int x = 0; x < w; ++x) img.at(x, y) = row[x];
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  std::vector<std::uint8_t> raster(image.size());
  for (std::size_t q = 0; q < image.size(); ++q) {
    const double v = std::clamp(image.pixels[q], 0.0, 1.0);
    raster[q] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) png_write_row(png, raster.data() + static_cast<std::size_t>(y) * image.width);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image box_downsample(const Image& image, int width, int height) {
  if (width <= 0 || height <= 0 || width > image.width || height > image.height) {
    throw InvalidArgument("box_downsample: target size must be positive and not larger than the source");
  }
  Image out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y) {
    const double y0 = y * sy, y1 = (y + 1) * sy;
    for (int x = 0; x < width; ++x) {
      const double x0 = x * sx, x1 = (x + 1) * sx;
      double acc = 0.0;
      for (int v = static_cast<int>(std::floor(y0)); v < std::min(image.height, static_cast<int>(std::ceil(y1))); ++v) {
        const double wy = std::min(y1, v + 1.0) - std::max(y0, static_cast<double>(v));
        for (int u = static_cast<int>(std::floor(x0)); u < std::min(image.width, static_cast<int>(std::ceil(x1)));
             ++u) {
          const double wx = std::min(x1, u + 1.0) - std::max(x0, static_cast<double>(u));
          acc += wx * wy * image.at(u, v);
        }
      }
      out.at(x, y) = acc / (sx * sy);
    }
  }
  return out;
}

}  // namespace sdfdiff
