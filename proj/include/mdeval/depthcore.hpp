#pragma once

#include "mdeval/types.hpp"

namespace mdeval {

/// point(col, row) = ((col - cx)/fx, (row - cy)/fy, 1) * depth. The z channel
/// is the input depth, bit for bit.
PointMap unproject(const DepthMap& depth, const CameraIntrinsics& intr);

/// Normal at an interior pixel from the cross product of the right-left and
/// bottom-top chords, flipped so that n . p < 0 (facing the camera). Pixels
/// with an invalid 4-neighbor or a degenerate cross product are invalid.
NormalMap compute_normals(const PointMap& points);

/// Normals from the least-squares plane through the valid points of a
/// window x window neighborhood (at least 3 points, odd window).
NormalMap compute_normals_plane_fit(const PointMap& points, int window = 5);

enum class BoundaryRule { kRatio, kAbsolute };

/// Marks adjacent valid pixel pairs as occlusion boundaries. Ratio rule:
/// max(a/b, b/a) > threshold. Absolute rule: |a - b| > threshold (meters).
EdgeMask detect_occlusion_boundaries(const DepthMap& depth, double threshold = 1.25,
                                     BoundaryRule rule = BoundaryRule::kRatio);

/// Forward log-depth differences over 4-adjacent valid pairs not flagged in
/// `boundary`.
GradientField log_depth_gradient(const DepthMap& depth, const EdgeMask& boundary);

/// Two triangles per pixel quad split along the top-left/bottom-right
/// diagonal: (TL, TR, BR) and (TL, BR, BL). A triangle is dropped when one of
/// its vertices is invalid or one of its two axis-aligned edges is flagged
/// in `boundary`. Vertices are camera-frame points from `unproject`.
TriangleMesh build_mesh(const DepthMap& depth, const CameraIntrinsics& intr,
                        const EdgeMask& boundary);

/// Area downsampling by an integer factor, averaged in inverse depth so that
/// planes stay planar. A block is valid when at least half of its pixels are.
DepthMap downsample(const DepthMap& depth, int factor);

/// Median over valid pixels (mean of the two middle values for even counts).
double median_depth(const DepthMap& depth);
double median(std::vector<double> values);

/// Connected components of valid pixels under 4-connectivity, not crossing
/// edges flagged in `cut`. Invalid pixels get label -1. Returns label count.
int connected_components(const DepthMap& depth, const EdgeMask& cut,
                         std::vector<int>& labels);

}  // namespace mdeval
