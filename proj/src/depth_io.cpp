#include "mdeval/depth_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mdeval/image.hpp"

namespace mdeval {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace

DepthMap read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || (magic != "Pf" && magic != "PF")) throw FormatError(path + ": bad PFM header");
  if (magic == "PF") throw FormatError(path + ": color PFM is not a depth map");
  in.get();  // single whitespace before the raster
  if (width <= 0 || height <= 0 || scale == 0.0) throw FormatError(path + ": bad PFM header");
  const bool little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;

  std::vector<std::uint32_t> raw(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!in) throw FormatError(path + ": truncated PFM raster");

  std::vector<double> values(raw.size());
  for (int r = 0; r < height; ++r) {
    const int src_row = height - 1 - r;
    for (int c = 0; c < width; ++c) {
      std::uint32_t bits = raw[static_cast<std::size_t>(src_row) * width + c];
      if (little != host_little) bits = byteswap32(bits);
      float f;
      std::memcpy(&f, &bits, 4);
      values[static_cast<std::size_t>(r) * width + c] = f;
    }
  }
  return DepthMap::from_values(height, width, std::move(values));
}

void write_pfm(const std::string& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << "Pf\n" << depth.width() << " " << depth.height() << "\n-1.0\n";
  const bool host_little = std::endian::native == std::endian::little;
  std::vector<std::uint32_t> raw(depth.size());
  for (int r = 0; r < depth.height(); ++r) {
    const int dst_row = depth.height() - 1 - r;
    for (int c = 0; c < depth.width(); ++c) {
      const float f = depth.valid(r, c) ? static_cast<float>(depth(r, c)) : 0.0f;
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      if (!host_little) bits = byteswap32(bits);
      raw[static_cast<std::size_t>(dst_row) * depth.width() + c] = bits;
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!out) throw FormatError("failed writing " + path);
}

std::string png16_sidecar_path(const std::string& png_path) { return png_path + ".json"; }

DepthMap read_depth_png16(const std::string& path) {
  const nlohmann::json side = read_json(png16_sidecar_path(path));
  Png16Encoding enc;
  try {
    enc.meters_per_unit = side.at("meters_per_unit").get<double>();
    enc.invalid_value = side.value("invalid_value", 0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(png16_sidecar_path(path) + ": " + e.what());
  }
  if (!(enc.meters_per_unit > 0.0)) throw FormatError("meters_per_unit must be positive");
  const Image16 img = read_png16(path);
  DepthMap d(img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const int v = img.pixels[static_cast<std::size_t>(r) * img.width + c];
      if (v == enc.invalid_value || v == 0) continue;
      d.set(r, c, v * enc.meters_per_unit);
    }
  }
  return d;
}

void write_depth_png16(const std::string& path, const DepthMap& depth,
                       const Png16Encoding& encoding) {
  Image16 img;
  img.width = depth.width();
  img.height = depth.height();
  img.pixels.assign(depth.size(), static_cast<std::uint16_t>(encoding.invalid_value));
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid_at(i)) continue;
    const double units = std::round(depth.at(i) / encoding.meters_per_unit);
    if (units < 1.0 || units > 65535.0 || units == encoding.invalid_value) {
      throw InvalidInput("depth " + std::to_string(depth.at(i)) +
                         " not representable with the given PNG16 encoding");
    }
    img.pixels[i] = static_cast<std::uint16_t>(units);
  }
  write_png16(path, img);
  nlohmann::json side{{"meters_per_unit", encoding.meters_per_unit},
                      {"invalid_value", encoding.invalid_value}};
  std::ofstream out(png16_sidecar_path(path));
  out << side.dump(2) << "\n";
}

DepthMap read_depth(const std::string& path) {
  if (ends_with(path, ".pfm")) return read_pfm(path);
  if (ends_with(path, ".png")) return read_depth_png16(path);
  throw FormatError("unsupported depth format: " + path);
}

void write_depth(const std::string& path, const DepthMap& depth) {
  if (ends_with(path, ".pfm")) return write_pfm(path, depth);
  if (ends_with(path, ".png")) return write_depth_png16(path, depth);
  throw FormatError("unsupported depth format: " + path);
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  const nlohmann::json j = read_json(path);
  CameraIntrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  k.validate();
  return k;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& intr) {
  nlohmann::json j{{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx}, {"cy", intr.cy}};
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace mdeval
