#pragma once

#include <span>
#include <string>
#include <string_view>

#include "mdeval/types.hpp"

namespace mdeval {

enum class AlignmentMode {
  kNone,
  kScaleDepth,
  kAffineDepthL1,
  kAffineDepthLstsq,
  kAffineDisparity,
  kPointmapScale,
  kPointmapAffine,
};

std::string_view to_string(AlignmentMode mode);
/// Accepts the names printed by to_string (e.g. "affine_disparity").
AlignmentMode parse_alignment_mode(std::string_view name);

/// aligned = scale * x + shift, where x is depth (or disparity for the
/// disparity mode). `clamped` is set when the unconstrained optimum would
/// have had a negative scale and the fit was pinned at zero.
struct AffineParams {
  double scale = 1.0;
  double shift = 0.0;
  bool clamped = false;
};

/// aligned point = scale * p + (0, 0, z_shift).
struct PointTransform {
  double scale = 1.0;
  double z_shift = 0.0;
  bool clamped = false;
};

struct AlignmentOptions {
  /// Cap on each pixel's weighted residual in the robust scale fits
  /// (relative error units). Infinity disables truncation.
  double truncation = 1.0;
  /// Floor for aligned disparities (1/m).
  double disparity_floor = 1e-6;
  /// Floor for aligned depths (m) after affine depth fits.
  double depth_floor = 1e-6;
};

/// Scale minimizing sum_i min(T, |s * pred_i - gt_i| / gt_i) over shared valid
/// pixels (exact, by sweeping the breakpoints of the piecewise-linear
/// objective). Requires >= 2 shared pixels.
AffineParams align_scale_depth(const DepthMap& pred, const DepthMap& gt,
                               const AlignmentOptions& opts = {});

/// min over (a >= 0, b) of sum_i |a * pred_i + b - gt_i|, golden-section on a
/// with b = median(gt - a * pred) for each trial slope.
AffineParams align_affine_depth_l1(const DepthMap& pred, const DepthMap& gt);

/// Ordinary least squares (a, b); a may be negative.
AffineParams align_affine_depth_lstsq(const DepthMap& pred, const DepthMap& gt);

/// Least squares of 1/gt on 1/pred.
AffineParams align_affine_disparity(const DepthMap& pred, const DepthMap& gt);

enum class PointAlignMode { kScale, kAffine };

/// Scale mode: s >= 0 minimizing sum_i min(T, ||s p_i - q_i||_1 / ||q_i||).
/// Affine mode: (s >= 0, z shift t) minimizing
/// sum_i ||s p_i + (0,0,t) - q_i||_1 / ||q_i|| (golden section on s, weighted
/// median t). Both point maps must share dimensions.
PointTransform align_pointmap(const PointMap& pred, const PointMap& gt, PointAlignMode mode,
                              const AlignmentOptions& opts = {});

DepthMap apply_depth_affine(const DepthMap& pred, const AffineParams& p, double depth_floor = 1e-6);
/// depth = 1 / max(scale / pred + shift, floor).
DepthMap apply_disparity_affine(const DepthMap& pred, const AffineParams& p,
                                double disparity_floor = 1e-6);
PointMap apply_point_transform(const PointMap& pts, const PointTransform& t);

// Building blocks, exposed for testing.

/// argmin_{a >= 0} sum_i min(T, w_i |a x_i - y_i|). Ties resolve to the
/// smallest a. `clamped` reports an optimum pinned at a = 0 by the constraint.
double truncated_l1_scale(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w, double truncation, bool* clamped = nullptr);

/// Smallest v with cumulative weight >= half the total (values sorted).
double weighted_median(std::span<const double> values, std::span<const double> weights);

/// Golden-section minimization of a convex function on [lo, hi].
template <typename F>
double golden_section_minimize(F&& f, double lo, double hi, double tol, int max_iter = 300) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace mdeval
