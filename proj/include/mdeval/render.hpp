#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mdeval/image.hpp"
#include "mdeval/types.hpp"

namespace mdeval {

/// Directional lights given as unit vectors pointing from the surface toward
/// the light, in the camera frame (+z looks into the scene).
struct LightRig {
  std::vector<Vec3> directions;
  double ambient = 0.15;

  void validate() const;
  /// Four lights at `elevation_deg` toward the camera, azimuths 0/90/180/270.
  static LightRig standard(double elevation_deg = 45.0, double ambient = 0.15);
};

/// min(1, ambient + max(0, n . l)).
double lambert(const Vec3& normal, const Vec3& light, double ambient);

/// Rigid camera motion applied to camera-frame points: p' = R p + t.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Z-buffered coverage of a mesh seen from `pose` through `intr`.
struct Raster {
  int height = 0;
  int width = 0;
  std::vector<int> triangle;                 // -1 where nothing is visible
  std::vector<std::array<double, 3>> bary;   // perspective-correct weights
  std::vector<double> depth;
};

/// Deterministic software rasterizer; pixel centers sit at integer
/// coordinates and coverage is inclusive of triangle edges.
Raster rasterize(const TriangleMesh& mesh, const CameraIntrinsics& intr, const CameraPose& pose,
                 int height, int width);

/// Camera-facing unit normal of a mesh triangle.
Vec3 face_normal(const TriangleMesh& mesh, int triangle);

/// Mesh with occlusion boundaries (ratio 1.25) cut; throws InvalidInput
/// when no triangle survives.
TriangleMesh depth_mesh(const DepthMap& depth, const CameraIntrinsics& intr);

/// One grayscale image per light, rendered from the original camera with
/// flat-shaded faces; uncovered pixels are 0.
std::vector<Image> textureless_relight(const DepthMap& depth, const CameraIntrinsics& intr,
                                       const LightRig& rig = LightRig::standard(), int threads = 0);

enum class ContourAxis { kX, kY, kZ };

struct ContourSpec {
  ContourAxis axis = ContourAxis::kZ;
  /// Iso-level spacing in meters; <= 0 selects range / 20 over valid pixels.
  double spacing = 0.0;
  /// Line width in pixels.
  double width = 1.0;
};

inline constexpr std::uint8_t kContourInk = 0;
inline constexpr std::uint8_t kContourBase = 200;

/// Grayscale image: valid pixels whose world coordinate along `axis` lies
/// within width/2 pixels of an iso-level are ink, other valid pixels the base
/// shade, invalid pixels 255. The pixel distance is |c - level| / |grad c|.
Image projected_contours(const DepthMap& depth, const CameraIntrinsics& intr, const ContourSpec& spec);

/// Spacing used when spec.spacing <= 0.
double default_contour_spacing(const DepthMap& depth, const CameraIntrinsics& intr, ContourAxis axis);

/// 8-connected components of pixels equal to `value`, as (row, col) lists.
std::vector<std::vector<std::array<int, 2>>> pixel_components(const Image& image, std::uint8_t value);

/// Largest perpendicular distance of the points from their total-least-squares line.
double max_line_deviation(const std::vector<std::array<int, 2>>& points);

/// Textured mesh (per-vertex colors from `image`) rendered from each pose.
std::vector<Image> textured_views(const DepthMap& depth, const CameraIntrinsics& intr, const Image& image,
                                  const std::vector<CameraPose>& poses);

/// Values mapped to a white-to-red ramp with `vmax` at full red (<= 0 uses
/// the maximum); `mask` zero pixels are black.
Image heatmap_image(const std::vector<double>& values, int height, int width,
                    std::span<const std::uint8_t> mask, double vmax = 0.0);

}  // namespace mdeval
