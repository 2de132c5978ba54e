#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <cstring>
#include <numeric>

#include "mdeval/depthcore.hpp"
#include "mdeval/fixtures.hpp"
#include "mdeval/perturb.hpp"
#include "mdeval/relnormal.hpp"

namespace mdeval {
namespace {

// Exhaustive mean over every (I, offset) in the (2r+1)^2 box.
double exhaustive_scale(const DepthMap& pred, const DepthMap& gt, const CameraIntrinsics& k, int radius,
                        int scale) {
  RelNormalConfig cfg;
  cfg.radius = radius;
  const auto n = prepare_scale(pred, k, gt, k, cfg, scale);
  if (!n) return NAN;
  const int h = n->gt.height, w = n->gt.width;
  double sum = 0.0;
  long count = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
          if (r + dr < 0 || r + dr >= h || c + dc < 0 || c + dc >= w) continue;
          const auto e = pair_error(*n, {r, c, r + dr, c + dc});
          if (!e) continue;
          sum += *e;
          ++count;
        }
      }
    }
  }
  return sum / static_cast<double>(count);
}

TEST(RelNormal, AngleBetween) {
  EXPECT_NEAR(angle_between(Vec3(1, 0, 0), Vec3(0, 1, 0)), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(angle_between(Vec3(1, 0, 0), Vec3(1, 1e-9, 0).normalized()), 1e-9, 1e-20);
}

TEST(RelNormal, ZeroOnGroundTruthAndScaledCopies) {
  const auto s = generate_scene(SceneKind::kSphereCap, 32, 32);
  RelNormalConfig cfg;
  cfg.radius = 6;
  cfg.samples = 20000;
  EXPECT_EQ(relnormal(s.depth, s.depth, s.intrinsics, cfg)->value, 0.0);
  auto scaled = s.depth;
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) scaled.set(r, c, s.depth(r, c) * 2.5);
  }
  EXPECT_LT(relnormal(scaled, s.depth, s.intrinsics, cfg)->value, 1e-9);
}

TEST(RelNormal, MatchesExhaustiveOnSmallGrid) {
  const auto s = generate_scene(SceneKind::kSphereCap, 8, 8);
  const auto pred = perturb_curvature(s.depth, 0.3, 1.0, 9);
  RelNormalConfig cfg;
  cfg.radius = 3;
  cfg.scales = {1};
  cfg.samples = 100000;
  const double est = relnormal(pred, s.depth, s.intrinsics, cfg)->value;
  EXPECT_NEAR(est, exhaustive_scale(pred, s.depth, s.intrinsics, 3, 1), 1e-3);
}

TEST(RelNormal, ThreadCountDoesNotChangeBits) {
  const auto s = generate_scene(SceneKind::kRamp, 48, 48);
  const auto pred = perturb_curvature(s.depth, 0.2, 2.0, 5);
  RelNormalConfig cfg;
  cfg.radius = 8;
  cfg.samples = 300000;
  cfg.threads = 1;
  const double one = relnormal(pred, s.depth, s.intrinsics, cfg)->value;
  cfg.threads = 4;
  const double four = relnormal(pred, s.depth, s.intrinsics, cfg)->value;
  EXPECT_EQ(std::memcmp(&one, &four, sizeof(double)), 0);
}

TEST(RelNormal, SmallScalesSkipped) {
  const auto s = generate_scene(SceneKind::kSphereCap, 10, 10);
  RelNormalConfig cfg;
  cfg.scales = {8};
  EXPECT_FALSE(relnormal(s.depth, s.depth, s.intrinsics, cfg).has_value());
}

TEST(RelNormal, PixelErrorsSumToScore) {
  const auto s = generate_scene(SceneKind::kSphereCap, 32, 32);
  const auto pred = perturb_curvature(s.depth, 0.3, 1.0, 2);
  RelNormalConfig cfg;
  cfg.radius = 4;
  cfg.samples = 20000;
  const auto px = relnormal_pixel_errors(pred, s.intrinsics, s.depth, s.intrinsics, cfg);
  EXPECT_NEAR(std::accumulate(px.begin(), px.end(), 0.0), relnormal(pred, s.depth, s.intrinsics, cfg)->value,
              1e-12);
}

TEST(RelNormal, ConfigValidation) {
  RelNormalConfig cfg;
  cfg.radius = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.scales.clear();
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

}  // namespace
}  // namespace mdeval
