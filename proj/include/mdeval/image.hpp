#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mdeval {

/// Interleaved 8-bit image (1 = gray, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int ch, std::uint8_t fill = 0)
      : width(w), height(h), channels(ch),
        pixels(static_cast<std::size_t>(w) * h * ch, fill) {}

  std::uint8_t& at(int row, int col, int ch = 0) {
    return pixels[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  std::uint8_t at(int row, int col, int ch = 0) const {
    return pixels[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  bool operator==(const Image&) const = default;
};

/// 16-bit single-channel image.
struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};

/// Reads 8-bit gray/RGB/RGBA/palette PNG files; alpha is dropped.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& image);

Image16 read_png16(const std::string& path);
void write_png16(const std::string& path, const Image16& image);

/// FNV-1a over the pixel buffer and dimensions; used for golden-image checks.
std::uint64_t image_hash(const Image& image);

}  // namespace mdeval
