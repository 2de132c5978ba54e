#include "mdeval/image.hpp"

#include <cstdio>
#include <memory>

#include <png.h>

#include "mdeval/types.hpp"

namespace mdeval {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw FormatError("cannot open " + path);
  return f;
}

// Decodes any PNG into rows of `out_depth` bits with 1 or 3 channels.
struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> raw;
};

Decoded decode(const std::string& path, bool want_16) {
  FilePtr f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("failed to decode " + path);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  if (want_16) {
    if (depth < 16) throw FormatError(path + " is not a 16-bit PNG");
    png_set_swap(png);  // host little-endian words
  } else if (depth == 16) {
    png_set_strip_16(png);
  }
  png_read_update_info(png, info);

  Decoded d;
  d.width = static_cast<int>(png_get_image_width(png, info));
  d.height = static_cast<int>(png_get_image_height(png, info));
  d.channels = png_get_channels(png, info);
  d.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  d.raw.resize(rowbytes * d.height);
  std::vector<png_bytep> rows(d.height);
  for (int r = 0; r < d.height; ++r) rows[r] = d.raw.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

void encode(const std::string& path, int width, int height, int channels, int bit_depth,
            const std::uint8_t* data) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("failed to encode " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(data + r * rowbytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read_png(const std::string& path) {
  Decoded d = decode(path, false);
  Image img;
  img.width = d.width;
  img.height = d.height;
  img.channels = d.channels;
  img.pixels = std::move(d.raw);
  return img;
}

void write_png(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw InvalidInput("write_png supports 1 or 3 channels");
  }
  encode(path, image.width, image.height, image.channels, 8, image.pixels.data());
}

Image16 read_png16(const std::string& path) {
  Decoded d = decode(path, true);
  if (d.channels != 1) throw FormatError(path + " is not a single-channel PNG");
  Image16 img;
  img.width = d.width;
  img.height = d.height;
  img.pixels.resize(static_cast<std::size_t>(d.width) * d.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint16_t>(d.raw[2 * i] | (d.raw[2 * i + 1] << 8));
  }
  return img;
}

void write_png16(const std::string& path, const Image16& image) {
  std::vector<std::uint8_t> bytes(image.pixels.size() * 2);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(image.pixels[i] & 0xff);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(image.pixels[i] >> 8);
  }
  encode(path, image.width, image.height, 1, 16, bytes.data());
}

std::uint64_t image_hash(const Image& image) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (int v : {image.width, image.height, image.channels}) {
    for (int k = 0; k < 4; ++k) mix(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  for (std::uint8_t b : image.pixels) mix(b);
  return h;
}

}  // namespace mdeval
