#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mdeval/alignment.hpp"
#include "mdeval/depthcore.hpp"
#include "mdeval/fixtures.hpp"

namespace mdeval {
namespace {

DepthMap map_values(const DepthMap& d, double (*f)(double, double), double s) {
  std::vector<double> v(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) v[i] = d.valid_at(i) ? f(d.at(i), s) : 0.0;
  return DepthMap::from_values(d.height(), d.width(), v);
}

double objective(std::span<const double> x, std::span<const double> y, std::span<const double> w, double t,
                 double a) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::min(t, w[i] * std::abs(a * x[i] - y[i]));
  return s;
}

TEST(AlignmentMode, NamesRoundTrip) {
  for (auto m : {AlignmentMode::kNone, AlignmentMode::kScaleDepth, AlignmentMode::kAffineDepthL1,
                 AlignmentMode::kAffineDepthLstsq, AlignmentMode::kAffineDisparity,
                 AlignmentMode::kPointmapScale, AlignmentMode::kPointmapAffine}) {
    EXPECT_EQ(parse_alignment_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_alignment_mode("bogus"), FormatError);
}

TEST(TruncatedL1, MatchesBreakpointEnumeration) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 9;
    std::vector<double> x(n), y(n), w(n);
    for (int i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      w[i] = 1.0 / y[i];
    }
    const double t = trial % 3 == 0 ? std::numeric_limits<double>::infinity() : 0.3;
    // The objective is piecewise linear; its minimum sits at a breakpoint.
    std::vector<double> cands{0.0};
    for (int i = 0; i < n; ++i) {
      cands.push_back(y[i] / x[i]);
      if (std::isfinite(t)) {
        cands.push_back((y[i] + t / w[i]) / x[i]);
        cands.push_back(std::max(0.0, (y[i] - t / w[i]) / x[i]));
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (double a : cands) best = std::min(best, objective(x, y, w, t, a));
    const double a = truncated_l1_scale(x, y, w, t);
    EXPECT_NEAR(objective(x, y, w, t, a), best, 1e-12);
  }
}

TEST(WeightedMedian, Basic) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(weighted_median(v, std::vector<double>{1, 1, 1, 1}), 2);
  EXPECT_DOUBLE_EQ(weighted_median(v, std::vector<double>{1, 1, 1, 5}), 4);
}

TEST(Alignment, ScaleRecoversFactor) {
  const auto gt = generate_scene(SceneKind::kSphereCap, 16, 16).depth;
  const auto pred = map_values(gt, [](double z, double s) { return z * s; }, 0.37);
  const auto p = align_scale_depth(pred, gt);
  EXPECT_NEAR(p.scale, 1.0 / 0.37, 1e-12);
  EXPECT_EQ(p.shift, 0.0);
}

TEST(Alignment, AffineDepthExact) {
  const auto gt = generate_scene(SceneKind::kRamp, 12, 12).depth;
  const auto pred = map_values(gt, [](double z, double) { return 0.5 * z + 3.0; }, 0);
  const auto l2 = align_affine_depth_lstsq(pred, gt);
  EXPECT_NEAR(l2.scale, 2.0, 1e-10);
  EXPECT_NEAR(l2.shift, -6.0, 1e-9);
  const auto l1 = align_affine_depth_l1(pred, gt);
  EXPECT_NEAR(l1.scale, 2.0, 1e-6);
  EXPECT_NEAR(l1.shift, -6.0, 1e-5);
}

TEST(Alignment, AffineDisparityExact) {
  const auto gt = generate_scene(SceneKind::kSphereCap, 12, 12).depth;
  const auto pred = map_values(gt, [](double z, double) { return 1.0 / (0.25 / z + 0.1); }, 0);
  const auto p = align_affine_disparity(pred, gt);
  const auto aligned = apply_disparity_affine(pred, p);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_NEAR(aligned.at(i), gt.at(i), 1e-10);
}

TEST(Alignment, NegativeSlopeClampedForL1) {
  const auto gt = generate_scene(SceneKind::kRamp, 4, 8).depth;
  const auto pred = map_values(gt, [](double z, double) { return 10.0 - z; }, 0);
  const auto p = align_affine_depth_l1(pred, gt);
  EXPECT_GE(p.scale, 0.0);
  EXPECT_TRUE(p.clamped);
}

TEST(Alignment, RequiresSharedPixels) {
  const DepthMap a(2, 2);
  const auto b = DepthMap::from_values(2, 2, {1, 1, 1, 1});
  EXPECT_THROW(align_affine_depth_lstsq(a, b), AlignmentError);
  EXPECT_THROW(align_scale_depth(a, b), AlignmentError);
}

TEST(Alignment, PointmapScaleAndShift) {
  const auto s = generate_scene(SceneKind::kSlantedPlane, 10, 10);
  const auto gt = unproject(s.depth, s.intrinsics);
  PointMap pred = gt;
  for (auto& p : pred.points) p = p / 3.0;
  const auto ts = align_pointmap(pred, gt, PointAlignMode::kScale);
  EXPECT_NEAR(ts.scale, 3.0, 1e-9);
  for (auto& p : pred.points) p.z() -= 0.2;
  const auto ta = align_pointmap(pred, gt, PointAlignMode::kAffine);
  const auto out = apply_point_transform(pred, ta);
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) worst = std::max(worst, (out.points[i] - gt.points[i]).norm());
  EXPECT_LT(worst, 1e-5);
}

}  // namespace
}  // namespace mdeval
