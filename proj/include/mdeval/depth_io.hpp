#pragma once

#include <string>

#include "mdeval/types.hpp"

namespace mdeval {

/// PFM: "Pf" header, negative scale (little-endian float32), rows stored
/// bottom to top. Non-finite and non-positive samples read as invalid;
/// invalid pixels are written as 0.
DepthMap read_pfm(const std::string& path);
void write_pfm(const std::string& path, const DepthMap& depth);

/// Sidecar for 16-bit PNG depth: depth = value * meters_per_unit; pixels
/// equal to invalid_value are invalid.
struct Png16Encoding {
  double meters_per_unit = 0.001;
  int invalid_value = 0;
};

/// The sidecar of `x.png` is `x.png.json`: {"meters_per_unit": .., "invalid_value": ..}.
std::string png16_sidecar_path(const std::string& png_path);
DepthMap read_depth_png16(const std::string& path);
void write_depth_png16(const std::string& path, const DepthMap& depth,
                       const Png16Encoding& encoding = {});

/// Dispatches on extension: .pfm or .png (with sidecar).
DepthMap read_depth(const std::string& path);
void write_depth(const std::string& path, const DepthMap& depth);

/// JSON {"fx": .., "fy": .., "cx": .., "cy": ..}.
CameraIntrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const CameraIntrinsics& intr);

}  // namespace mdeval
