#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "mdeval/grid_solver.hpp"
#include "mdeval/types.hpp"

namespace mdeval {

enum class PerturbationKind {
  kSurfaceOrientation,
  kCameraIntrinsics,
  kRelativeScale,
  kCurvature,
  kAffineDepth,
  kAffineDisparity,
  kBoundary,
};

std::string_view to_string(PerturbationKind kind);
/// Accepts "surface_orientation", "camera_intrinsics", "relative_scale",
/// "curvature", "affine_depth", "affine_disparity", "boundary".
PerturbationKind parse_perturbation_kind(std::string_view name);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kAffineDepth;
  /// Degrees for orientation, focal/scale factor (>= 1) for intrinsics,
  /// relative scale and the affine kinds, noise amplitude (>= 0) for
  /// curvature, filter half-width (integer >= 0) for boundary.
  double intensity = 1.0;
  Vec3 axis{1.0, 0.0, 0.0};
  double sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// Intensity at which the generator is the identity.
  double identity_intensity() const;
};

/// The eight sensitivity columns: the six kinds with curvature split by
/// frequency and affine split into depth and disparity.
enum class PerturbationColumn {
  kSurfaceOrientation,
  kCameraIntrinsics,
  kRelativeScale,
  kCurvatureHigh,
  kCurvatureLow,
  kAffineDepth,
  kAffineDisparity,
  kBoundary,
};

inline constexpr std::array<PerturbationColumn, 8> kAllColumns{
    PerturbationColumn::kSurfaceOrientation, PerturbationColumn::kCameraIntrinsics,
    PerturbationColumn::kRelativeScale,      PerturbationColumn::kCurvatureHigh,
    PerturbationColumn::kCurvatureLow,       PerturbationColumn::kAffineDepth,
    PerturbationColumn::kAffineDisparity,    PerturbationColumn::kBoundary,
};

std::string_view to_string(PerturbationColumn column);
PerturbationColumn parse_perturbation_column(std::string_view name);
/// Short display header, e.g. "Curv. (high)".
std::string_view column_label(PerturbationColumn column);

/// Spec for a column at a given raw intensity (sigma 1 / 10 for curvature).
PerturbationSpec column_spec(PerturbationColumn column, double intensity, std::uint64_t seed = 0,
                             const Vec3& axis = Vec3(1.0, 0.0, 0.0));
/// Default six-point raw intensity grid, starting at the identity.
std::vector<double> default_intensities(PerturbationColumn column);
/// Raw intensity minus the identity intensity, the x axis of response fits.
double intensity_offset(PerturbationColumn column, double raw_intensity);

struct PerturbedDepth {
  DepthMap depth;
  CameraIntrinsics intrinsics;
  /// Filled by the gradient-domain kinds.
  SolveReport solve;
};

struct GradientSolveOptions {
  SolverOptions solver;
  /// Occlusion boundaries (ratio rule) whose constraints are dropped.
  double boundary_ratio = 1.25;
};

DepthMap perturb_surface_orientation(const DepthMap& gt, const CameraIntrinsics& intr,
                                     double angle_deg, const Vec3& axis,
                                     const GradientSolveOptions& options = {},
                                     SolveReport* report = nullptr);
PerturbedDepth perturb_camera_intrinsics(const DepthMap& gt, const CameraIntrinsics& intr, double s,
                                         const GradientSolveOptions& options = {});

/// Relative-scale partition. `near`/`between`/`far` flags per pixel.
struct ScalePartition {
  std::vector<std::uint8_t> region;  // 0 near, 1 between, 2 far, 255 invalid
  double d_l = 0.0;
  double d_r = 0.0;
  bool from_boundaries = false;
};

/// Uses the occlusion-boundary split when boundaries cut the valid pixels into
/// exactly two components; otherwise searches 0.5% depth quantiles q_i < q_j
/// with q_j = q_i + 5%, at least 30% of pixels strictly below d_l and 30%
/// strictly above d_r, minimizing d_r / d_l (ties to the smaller d_l).
/// Throws InfeasibleError when no candidate qualifies.
ScalePartition relative_scale_partition(const DepthMap& gt, double boundary_ratio = 1.25);
DepthMap perturb_relative_scale(const DepthMap& gt, double s);

/// Multiplier field clip(Gaussian(K, sigma), 0.1) with K ~ U[1-s, 1+s] drawn
/// per pixel from a counter-based generator keyed by (seed, pixel index).
std::vector<double> curvature_multiplier(int height, int width, double s, double sigma,
                                         std::uint64_t seed);
/// Separable Gaussian smoothing, kernel truncated at 4 sigma and renormalized,
/// half-sample symmetric padding.
std::vector<double> gaussian_smooth(const std::vector<double>& field, int height, int width,
                                    double sigma);
/// Uniform [0, 1) variate for (seed, index).
double counter_uniform(std::uint64_t seed, std::uint64_t index);
DepthMap perturb_curvature(const DepthMap& gt, double s, double sigma, std::uint64_t seed);

DepthMap perturb_affine_depth(const DepthMap& gt, double s);
DepthMap perturb_affine_disparity(const DepthMap& gt, double s);

/// Valid-masked (2s+1)^2 mean filter, clipped to [0.7, 1.3] x gt per pixel.
DepthMap perturb_boundary(const DepthMap& gt, int s);

PerturbedDepth apply_perturbation(const DepthMap& gt, const CameraIntrinsics& intr,
                                  const PerturbationSpec& spec,
                                  const GradientSolveOptions& options = {});

/// Applies `base` at each intensity (base.intensity is overridden).
std::vector<std::pair<double, PerturbedDepth>> sweep(const DepthMap& gt,
                                                     const CameraIntrinsics& intr,
                                                     const PerturbationSpec& base,
                                                     const std::vector<double>& intensities,
                                                     const GradientSolveOptions& options = {});

// Exposed for testing.

/// Target log-depth difference log z_j - log z_i for neighbors whose 3D chord
/// is perpendicular to `normal`: log(r_i . n) - log(r_j . n). nullopt when
/// the two ray projections differ in sign or vanish.
std::optional<double> plane_log_step(const Vec3& ray_i, const Vec3& ray_j, const Vec3& normal);

}  // namespace mdeval
