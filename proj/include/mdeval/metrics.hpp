#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdeval/alignment.hpp"
#include "mdeval/relnormal.hpp"
#include "mdeval/types.hpp"

namespace mdeval {

enum class MetricBase {
  kAbsRel,
  kAbsRelP,
  kDelta,
  kRmse,
  kRmseLog,
  kRmseLogSI,
  kWkdr,
  kBoundaryF1,
  kRelNormal,
};

std::string_view to_string(MetricBase base);
MetricBase parse_metric_base(std::string_view name);

struct MetricParams {
  /// Delta threshold is 1.25^t.
  double delta_exponent = 1.0;
  /// WKDR "equal" band: ratios within [1/tau, tau].
  double wkdr_tau = 1.02;
  std::uint64_t wkdr_pairs = 100'000;
  std::vector<double> f1_thresholds{1.05, 1.1, 1.15, 1.2, 1.25};
  int f1_tolerance = 1;
  RelNormalConfig relnormal;
  AlignmentOptions alignment;

  bool operator==(const MetricParams& o) const;
};

/// A base metric paired with a pre-metric alignment. Serialized as
/// "BASE@ALIGNMENT[key=value,...]", e.g. "delta@none[t=0.125]"; list values
/// use ';' ("boundary_f1@none[thresholds=1.05;1.15]"). Only parameters that
/// apply to the base and differ from the defaults are written.
struct MetricSpec {
  MetricBase base = MetricBase::kAbsRel;
  AlignmentMode alignment = AlignmentMode::kNone;
  MetricParams params;

  std::string to_string() const;
  static MetricSpec parse(std::string_view text);
  /// Human-readable table row, e.g. "AbsRel - Disparity Af".
  std::string row_label() const;
  bool uses_points() const;
  void validate() const;

  bool operator==(const MetricSpec& o) const {
    return base == o.base && alignment == o.alignment && params == o.params;
  }
};

/// The row catalog used by the sensitivity tables: depth metrics under every
/// depth/disparity alignment, AbsRel_p under point alignments, and the
/// alignment-free WKDR, BoundaryF1 and RelNormal.
std::vector<MetricSpec> metric_catalog();

// Base metrics over the shared valid pixels. Depth metrics throw InvalidInput
// when no pixel is shared.

MetricScore absrel(const DepthMap& pred, const DepthMap& gt);
MetricScore absrel_p(const PointMap& pred, const PointMap& gt);
/// 1 - fraction of pixels with max(p/g, g/p) < 1.25^t.
MetricScore delta(const DepthMap& pred, const DepthMap& gt, double exponent);
MetricScore rmse(const DepthMap& pred, const DepthMap& gt);
MetricScore rmse_log(const DepthMap& pred, const DepthMap& gt);
MetricScore rmse_log_si(const DepthMap& pred, const DepthMap& gt);
/// Fraction of Sobol-sampled pixel pairs (whole image, first `pairs` points)
/// whose ordinal label (closer / farther / equal within tau) differs.
MetricScore wkdr(const DepthMap& pred, const DepthMap& gt, std::uint64_t pairs, double tau);

/// Pixel edge map: a pixel is an edge when it belongs to an adjacent valid
/// pair (within `mask`) whose depth ratio exceeds `threshold`.
std::vector<std::uint8_t> ratio_edges(const DepthMap& depth, std::span<const std::uint8_t> mask,
                                      double threshold);

/// 1 - mean F1 over thresholds at which gt has edges; matches use a
/// Chebyshev `tolerance`-pixel dilation. nullopt when gt has no edge at any
/// threshold.
std::optional<MetricScore> boundary_f1(const DepthMap& pred, const DepthMap& gt,
                                       std::span<const double> thresholds, int tolerance = 1);

/// Score plus a per-pixel attribution that sums to the score.
struct Evaluation {
  std::optional<MetricScore> score;
  std::vector<double> pixel_errors;
};

/// Applies spec.alignment, then the base metric. Point metrics and RelNormal
/// unproject the prediction with `pred_intr` (defaults to `gt_intr`).
std::optional<MetricScore> evaluate(const MetricSpec& spec, const DepthMap& pred,
                                    const DepthMap& gt, const CameraIntrinsics& gt_intr,
                                    const std::optional<CameraIntrinsics>& pred_intr = std::nullopt);

Evaluation evaluate_detailed(const MetricSpec& spec, const DepthMap& pred, const DepthMap& gt,
                             const CameraIntrinsics& gt_intr,
                             const std::optional<CameraIntrinsics>& pred_intr = std::nullopt,
                             bool with_pixels = true);

/// Prediction after spec.alignment (depth channel), for inspection and heatmaps.
DepthMap aligned_prediction(const MetricSpec& spec, const DepthMap& pred, const DepthMap& gt,
                            const CameraIntrinsics& gt_intr, const CameraIntrinsics& pred_intr);

}  // namespace mdeval
