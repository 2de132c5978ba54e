#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mdeval {

using Vec3 = Eigen::Vector3d;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a type invariant (bad dimensions, non-positive depth, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Alignment could not be computed (e.g. empty shared mask).
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to reach its residual target.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// A problem has no feasible solution (relative-scale partition, SAWA, ...).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or serialized string.
class FormatError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Camera
// ---------------------------------------------------------------------------

/// Pinhole intrinsics in pixels. Pixel (col, row) centers sit at integer
/// coordinates.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;

  /// Intrinsics of an image area-downsampled by an integer factor: block
  /// (R, C) covers source pixels [kR, kR+k) x [kC, kC+k), so its center maps
  /// to source coordinate kC + (k-1)/2.
  CameraIntrinsics downsampled(int factor) const;

  /// Ray direction with unit z through pixel (col, row).
  Vec3 ray(double col, double row) const {
    return {(col - cx) / fx, (row - cy) / fy, 1.0};
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

// ---------------------------------------------------------------------------
// Depth map
// ---------------------------------------------------------------------------

/// H x W depth field in meters with a validity mask. Valid values are finite
/// and strictly positive; invalid entries are stored as 0.
class DepthMap {
 public:
  DepthMap() = default;
  /// All pixels invalid.
  DepthMap(int height, int width);
  /// Throws InvalidInput if a valid value is not finite and positive.
  DepthMap(int height, int width, std::vector<double> values,
           std::vector<std::uint8_t> valid);
  /// Validity inferred: finite and > 0.
  static DepthMap from_values(int height, int width, std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  double operator()(int row, int col) const { return values_[index(row, col)]; }
  double at(std::size_t i) const { return values_[i]; }
  bool valid(int row, int col) const { return valid_[index(row, col)] != 0; }
  bool valid_at(std::size_t i) const { return valid_[i] != 0; }

  void set(int row, int col, double depth);
  void invalidate(int row, int col);

  std::span<const double> values() const { return values_; }
  std::span<const std::uint8_t> mask() const { return valid_; }
  std::size_t valid_count() const;

  /// Copy keeping only pixels valid in both maps.
  DepthMap masked(std::span<const std::uint8_t> mask) const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

/// Per-pixel AND of two masks of equal size.
std::vector<std::uint8_t> shared_mask(const DepthMap& a, const DepthMap& b);

// ---------------------------------------------------------------------------
// Derived fields
// ---------------------------------------------------------------------------

struct PointMap {
  int height = 0;
  int width = 0;
  std::vector<Vec3> points;
  std::vector<std::uint8_t> valid;

  const Vec3& operator()(int row, int col) const { return points[row * width + col]; }
  std::size_t size() const { return points.size(); }
};

struct NormalMap {
  int height = 0;
  int width = 0;
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> valid;

  const Vec3& operator()(int row, int col) const { return normals[row * width + col]; }
  std::size_t size() const { return normals.size(); }
};

/// Adjacent-pixel relation flags. horizontal[i] refers to the pair
/// (row, col)-(row, col+1) and vertical[i] to (row, col)-(row+1, col), with
/// i = row * width + col. Entries for pairs leaving the image are always 0.
struct EdgeMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> horizontal;
  std::vector<std::uint8_t> vertical;

  static EdgeMask empty(int height, int width);
  std::size_t count() const;
};

/// Forward differences of log depth. du[i] = log z(row, col+1) - log z(row, col)
/// when du_mask[i] is set; dv analogously along rows.
struct GradientField {
  int height = 0;
  int width = 0;
  std::vector<double> du;
  std::vector<double> dv;
  std::vector<std::uint8_t> du_mask;
  std::vector<std::uint8_t> dv_mask;
};

/// Grid triangulation of a depth map. Triangles index into `vertices`, which
/// holds one entry per pixel (row-major); unused vertices are left in place.
struct TriangleMesh {
  int height = 0;
  int width = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Standardized score: 0 for a perfect prediction, larger is worse.
/// `count` is the number of pixels (or pairs) the value averages over.
struct MetricScore {
  double value = 0.0;
  std::size_t count = 0;
};

}  // namespace mdeval
