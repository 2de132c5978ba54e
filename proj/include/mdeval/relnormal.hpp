#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mdeval/sobol.hpp"
#include "mdeval/types.hpp"

namespace mdeval {

enum class NormalMode { kCrossProduct, kPlaneFit };

struct RelNormalConfig {
  int radius = 32;
  std::vector<int> scales{1, 2, 4, 8};
  std::uint64_t samples = 1'000'000;
  NormalMode normal_mode = NormalMode::kCrossProduct;
  int plane_window = 5;
  /// 0 = hardware concurrency. Results do not depend on this value.
  int threads = 0;

  void validate() const;
};

/// Normals of both maps at one scale, restricted to their shared support.
struct ScaleNormals {
  int scale = 1;
  NormalMap pred;
  NormalMap gt;
};

/// Masks both maps to their shared validity, area-downsamples by `scale`,
/// unprojects with the matching downsampled intrinsics and computes normals.
/// Returns nullopt when the downsampled grid is smaller than 3x3.
std::optional<ScaleNormals> prepare_scale(const DepthMap& pred, const CameraIntrinsics& pred_intr,
                                          const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                          const RelNormalConfig& config, int scale);

/// Angle between unit vectors via atan2(|a x b|, a . b).
double angle_between(const Vec3& a, const Vec3& b);

/// |angle(pred_I, pred_J) - angle(gt_I, gt_J)| / pi for a pair whose four
/// normals are valid; nullopt otherwise.
std::optional<double> pair_error(const ScaleNormals& n, const PairSample& p);

/// Mean pair error over the first config.samples Sobol pairs at one scale.
/// Pairs without four valid normals are excluded from the mean. nullopt when
/// no pair is usable. Summation runs in fixed blocks so the value is
/// bit-identical for any thread count.
std::optional<MetricScore> relnormal_at_scale(const DepthMap& pred, const CameraIntrinsics& pred_intr,
                                              const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                              const RelNormalConfig& config, int scale);

/// Mean of the per-scale scores over config.scales, skipping absent scales.
std::optional<MetricScore> relnormal(const DepthMap& pred, const CameraIntrinsics& pred_intr,
                                     const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                     const RelNormalConfig& config = {});
std::optional<MetricScore> relnormal(const DepthMap& pred, const DepthMap& gt,
                                     const CameraIntrinsics& intr,
                                     const RelNormalConfig& config = {});

/// Per-pixel attribution at full resolution: each pair's error, divided by
/// the pair count of its scale and the number of present scales, is split
/// evenly between its two pixels and then evenly over the valid source pixels
/// of each downsampled block. Sums to relnormal(...).value.
std::vector<double> relnormal_pixel_errors(const DepthMap& pred, const CameraIntrinsics& pred_intr,
                                           const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                           const RelNormalConfig& config = {});

}  // namespace mdeval
