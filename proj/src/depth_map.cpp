#include <algorithm>
#include <cmath>
#include <string>

#include "mdeval/types.hpp"

namespace mdeval {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy)) {
    throw InvalidInput("camera intrinsics require finite fx > 0 and fy > 0");
  }
}

CameraIntrinsics CameraIntrinsics::downsampled(int factor) const {
  if (factor < 1) throw InvalidInput("downsample factor must be >= 1");
  const double k = factor;
  const double half = (k - 1.0) / 2.0;
  return {fx / k, fy / k, (cx - half) / k, (cy - half) / k};
}

namespace {

void check_dims(int height, int width) {
  if (height < 2 || width < 2) {
    throw InvalidInput("depth map must be at least 2x2, got " + std::to_string(height) +
                       "x" + std::to_string(width));
  }
}

bool usable(double z) { return std::isfinite(z) && z > 0.0; }

}  // namespace

DepthMap::DepthMap(int height, int width)
    : height_(height),
      width_(width),
      values_(static_cast<std::size_t>(height) * width, 0.0),
      valid_(static_cast<std::size_t>(height) * width, 0) {
  check_dims(height, width);
}

DepthMap::DepthMap(int height, int width, std::vector<double> values,
                   std::vector<std::uint8_t> valid)
    : height_(height), width_(width), values_(std::move(values)), valid_(std::move(valid)) {
  check_dims(height, width);
  const auto n = static_cast<std::size_t>(height) * width;
  if (values_.size() != n || valid_.size() != n) {
    throw InvalidInput("depth map buffers do not match dimensions");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (valid_[i]) {
      valid_[i] = 1;
      if (!usable(values_[i])) {
        throw InvalidInput("valid depth must be finite and positive (pixel " +
                           std::to_string(i) + ")");
      }
    } else {
      values_[i] = 0.0;
    }
  }
}

DepthMap DepthMap::from_values(int height, int width, std::vector<double> values) {
  std::vector<std::uint8_t> valid(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) valid[i] = usable(values[i]) ? 1 : 0;
  return DepthMap(height, width, std::move(values), std::move(valid));
}

void DepthMap::set(int row, int col, double depth) {
  if (!usable(depth)) throw InvalidInput("depth must be finite and positive");
  values_[index(row, col)] = depth;
  valid_[index(row, col)] = 1;
}

void DepthMap::invalidate(int row, int col) {
  values_[index(row, col)] = 0.0;
  valid_[index(row, col)] = 0;
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), 1));
}

DepthMap DepthMap::masked(std::span<const std::uint8_t> mask) const {
  if (mask.size() != size()) throw InvalidInput("mask size mismatch");
  DepthMap out = *this;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!mask[i]) {
      out.values_[i] = 0.0;
      out.valid_[i] = 0;
    }
  }
  return out;
}

std::vector<std::uint8_t> shared_mask(const DepthMap& a, const DepthMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidInput("depth maps differ in size");
  }
  std::vector<std::uint8_t> m(a.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = a.valid_at(i) && b.valid_at(i);
  return m;
}

EdgeMask EdgeMask::empty(int height, int width) {
  EdgeMask e;
  e.height = height;
  e.width = width;
  e.horizontal.assign(static_cast<std::size_t>(height) * width, 0);
  e.vertical.assign(static_cast<std::size_t>(height) * width, 0);
  return e;
}

std::size_t EdgeMask::count() const {
  return static_cast<std::size_t>(std::count(horizontal.begin(), horizontal.end(), 1) +
                                  std::count(vertical.begin(), vertical.end(), 1));
}

}  // namespace mdeval
